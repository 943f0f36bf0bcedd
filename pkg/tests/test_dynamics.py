import math

import numpy as np
import pytest

from lamplighter import (
    BiasedZWalk,
    BiasParams,
    ConfigError,
    HomesickGraphWalk,
    HomesickParams,
    StepBudgetError,
    build_gamma_m,
    cyclic_group,
    initial_state,
    integer_group,
    local_time_run,
    make_uniform_measure,
    ret_prob_given_extremes,
    ret_prob_given_local_times,
    run_excursion,
    simulate_returns,
    ssw_step,
    stream_rng,
    switch_count_local_times,
)
from lamplighter.dynamics import ssw_step_forced
from lamplighter.lamps import SwitchMeasure
from lamplighter.oracles import (
    check_lamp_uniformity,
    check_return_prob_given_extremes,
    check_return_prob_given_local_times,
    exhaustive_return_prob,
    first_return_paths,
    path_extremes_prediction,
    path_local_time_prediction,
)

MU2 = make_uniform_measure(cyclic_group(2))


def test_forced_step_example():
    # from all-identity lamps at 0: draws U=1, V=0, move to +1
    state = initial_state(MU2, 0)
    ssw_step_forced(state, 1, 1, 0)
    assert state.lamps == {0: 1}
    assert state.position == 1
    assert state.steps == 1


def test_untouched_lamps_left_alone():
    state = initial_state(MU2, 0)
    state.lamps = {5: 1, -2: 1}
    ssw_step_forced(state, 1, 1, 1)
    assert state.lamps[5] == 1 and state.lamps[-2] == 1


def test_touched_lamp_law_single_step():
    # enumerate all (U, V) for Z/2: the two touched lamps end iid uniform
    counts = {}
    for u in (0, 1):
        for v in (0, 1):
            state = initial_state(MU2, 0)
            ssw_step_forced(state, u, 1, v)
            key = (state.lamps.get(0, 0), state.lamps.get(1, 0))
            counts[key] = counts.get(key, 0) + 1
    assert counts == {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 1}


def test_first_return_paths_enumeration():
    paths = first_return_paths(6)
    # 2 of length 2, 2*Catalan(1)=2 of length 4, 2*Catalan(2)=4 of length 6
    by_len = {}
    for p in paths:
        by_len.setdefault(len(p) - 1, []).append(p)
    assert sorted(by_len) == [2, 4, 6]
    assert len(by_len[2]) == 2 and len(by_len[4]) == 2 and len(by_len[6]) == 4
    for p in paths:
        assert p[0] == p[-1] == 0
        assert all(x != 0 for x in p[1:-1])
        assert all(abs(a - b) == 1 for a, b in zip(p, p[1:]))


def test_exhaustive_extremes_oracle_exact():
    rep = check_return_prob_given_extremes(6, MU2, atol=0.0)
    assert rep.ok and rep.max_abs_error == 0.0
    # and for a 3-element lamp group
    rep3 = check_return_prob_given_extremes(4, make_uniform_measure(cyclic_group(3)), atol=1e-15)
    assert rep3.ok


def test_exhaustive_lamp_uniformity_exact():
    rep = check_lamp_uniformity(6, MU2, atol=0.0)
    assert rep.ok and rep.max_abs_error == 0.0


def test_exhaustive_local_time_oracle():
    nu = SwitchMeasure(integer_group(), ((1, 0.25), (0, 0.5), (-1, 0.25)))
    rep = check_return_prob_given_local_times(4, nu, atol=1e-12)
    assert rep.ok
    # uniform measures must satisfy both the extremes and local-time forms
    rep_u = check_return_prob_given_local_times(6, MU2, atol=1e-12)
    assert rep_u.ok


def test_oracle_matches_exact_module_predictions():
    for path in first_return_paths(6):
        got = exhaustive_return_prob(path, MU2)
        assert got == ret_prob_given_extremes(max(path), min(path), 2)
        assert path_extremes_prediction(path, 2) == got


def test_local_time_prediction_uses_half_open_counts():
    # path 0,1,0: root visited at t in {0, 2} but the lamp at 0 absorbs only
    # 2 draws (opening and closing switch), so the half-open count is 1
    nu = SwitchMeasure(integer_group(), ((1, 0.25), (0, 0.5), (-1, 0.25)))
    path = (0, 1, 0)
    want = path_local_time_prediction(path, nu)
    mu2_2 = 0.375  # nu*nu at 0: 2*(1/4)(1/4)+ (1/2)^2 + ... enumerated below
    brute = exhaustive_return_prob(path, nu)
    assert want == pytest.approx(brute, abs=1e-15)
    from lamplighter import convolution_power_at_identity

    assert want == pytest.approx(convolution_power_at_identity(nu, 2) ** 2)
    assert convolution_power_at_identity(nu, 2) == pytest.approx(mu2_2)


def test_run_excursion_basics():
    walk = BiasedZWalk(BiasParams(0.75))
    rng = stream_rng(5, 0)
    lengths = []
    for _ in range(600):
        state = initial_state(MU2, 0)
        state, rec = run_excursion(state, walk, MU2, rng)
        lengths.append(rec.length)
        assert rec.length % 2 == 0 and rec.length >= 2
        assert rec.sign in (-1, 1)
        if rec.length == 2:
            assert (rec.max_proj, rec.min_proj) in ((1, 0), (0, -1))
        # sign equals the side of the first step
        assert (rec.sign > 0) == (rec.max_proj > 0)
    # P(length = 2) = p at drift p: Catalan(0) * p
    freq = np.mean([l == 2 for l in lengths])
    sigma = math.sqrt(0.75 * 0.25 / len(lengths))
    assert abs(freq - 0.75) <= 3 * sigma


def test_simulate_returns_invariants():
    walk = BiasedZWalk(BiasParams(0.75))
    rng = stream_rng(17, 0)
    stats = simulate_returns(200, walk, MU2, rng)
    assert stats.n_plus + stats.n_minus == stats.k
    assert all(a < b for a, b in zip(stats.rho, stats.rho[1:]))
    assert sum(stats.local_times.values()) == stats.rho[-1] + 1
    assert stats.range_size <= stats.rho[-1] + 1
    assert stats.local_times[0] == stats.k + 1
    # every lamp support index lies within the visited interval
    assert set(stats.local_times) == set(range(stats.m_minus, stats.m_plus + 1))


def test_simulate_returns_mean_rho():
    # E[rho_k] = k m with m = 2p/(2p-1) = 3 at p = 3/4
    walk = BiasedZWalk(BiasParams(0.75))
    rng = stream_rng(23, 0)
    k = 10**4
    stats = simulate_returns(k, walk, MU2, rng)
    mean = stats.rho[-1] / k
    sigma = math.sqrt(6.0 / k)  # Var(rho_1) = 6 at p = 3/4
    assert abs(mean - 3.0) <= 3 * sigma


def test_simulate_returns_deterministic():
    walk = BiasedZWalk(BiasParams(0.8))
    a = simulate_returns(50, walk, MU2, stream_rng(9, 4))
    b = simulate_returns(50, walk, MU2, stream_rng(9, 4))
    assert a == b


def test_cross_layer_identity_on_simulated_paths():
    # uniform measure: the local-time product equals the extremes formula exactly
    walk = BiasedZWalk(BiasParams(0.7))
    for seed in range(6):
        stats = simulate_returns(30, walk, MU2, stream_rng(31, seed))
        counts = switch_count_local_times(stats, 0)
        prod = ret_prob_given_local_times(counts, MU2)
        assert prod == ret_prob_given_extremes(stats.m_plus, stats.m_minus, 2)


def test_local_time_run():
    walk = BiasedZWalk(BiasParams(0.8))
    res0 = local_time_run(0, walk, MU2, stream_rng(1, 0))
    assert res0.xi_identity == 1
    res = local_time_run(500, walk, MU2, stream_rng(1, 1))
    assert 1 <= res.xi_identity <= res.root_visits
    assert res.range_size <= 501


def test_step_budget_guard():
    walk = BiasedZWalk(BiasParams(0.51))
    state = initial_state(MU2, 0)
    with pytest.raises(StepBudgetError):
        run_excursion(state, walk, MU2, stream_rng(2, 0), step_budget=4)


def test_excursion_requires_root_start():
    walk = BiasedZWalk(BiasParams(0.75))
    state = initial_state(MU2, 3)
    with pytest.raises(ConfigError):
        run_excursion(state, walk, MU2, stream_rng(3, 0))


def test_graph_walk_excursions_on_gamma():
    g = build_gamma_m(3, 24)
    walk = HomesickGraphWalk(g, HomesickParams(3.0))
    rng = stream_rng(11, 0)
    stats = simulate_returns(100, walk, MU2, rng)
    assert stats.n_plus + stats.n_minus == stats.k
    assert stats.m_plus >= 1 and stats.m_minus <= -1
    assert sum(stats.local_times.values()) == stats.rho[-1] + 1
    # projections of visited vertices stay within the recorded extremes
    for v in stats.local_times:
        pr = walk.projection(v)
        assert stats.m_minus <= pr <= stats.m_plus
