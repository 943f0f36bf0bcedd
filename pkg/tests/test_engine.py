import math
import os

import numpy as np
import pytest

from lamplighter import (
    BiasedZWalk,
    BiasParams,
    WalkConfig,
    build_line_graph,
    cyclic_group,
    make_uniform_measure,
    ret_prob_at_rho_k,
    simulate_returns,
    stream_rng,
)
from lamplighter import engine as eng
from lamplighter.engine import EngineSpec, GraphTables, auto_radius, simulate_excursions, simulate_local_times
from lamplighter.lamps import SwitchMeasure
from lamplighter.montecarlo import engine_spec, walk_tables

MU2 = make_uniform_measure(cyclic_group(2))


def line_tables(lam=3.0, radius=200):
    return GraphTables(build_line_graph(radius), lam)


def test_engine_deterministic_same_seed():
    t = line_tables()
    spec = EngineSpec(lamp_order=2, track_range=True)
    a = simulate_excursions(t, [1, 3], 500, 77, spec)
    b = simulate_excursions(t, [1, 3], 500, 77, spec)
    for name in ("rho", "m_plus", "m_minus", "n_plus", "range_size", "identity", "id_count", "aborted"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_engine_deterministic_across_thread_counts():
    t = line_tables()
    spec1 = EngineSpec(lamp_order=2, track_range=True, batch_size=256, threads=1)
    spec4 = EngineSpec(lamp_order=2, track_range=True, batch_size=256, threads=4)
    a = simulate_excursions(t, [2], 2000, 5, spec1)
    b = simulate_excursions(t, [2], 2000, 5, spec4)
    assert np.array_equal(a.rho, b.rho)
    assert np.array_equal(a.identity, b.identity)
    assert np.array_equal(a.range_size, b.range_size)
    c = simulate_local_times(t, [50], 2000, 5, spec1)
    d = simulate_local_times(t, [50], 2000, 5, spec4)
    assert np.array_equal(c.xi, d.xi)


def test_threads_env_cap(monkeypatch):
    monkeypatch.setenv("LAMPLIGHTER_THREADS", "2")
    assert eng.thread_count(8) == 2
    assert eng.thread_count(None) == 2
    monkeypatch.delenv("LAMPLIGHTER_THREADS")
    assert eng.thread_count(None) == 1


def test_engine_matches_exact_return_prob():
    t = line_tables(lam=3.0)
    spec = EngineSpec(lamp_order=2)
    s = simulate_excursions(t, [1, 2], 120_000, 424, spec)
    assert s.n_ok == 120_000
    for j, k in enumerate([1, 2]):
        p_hat = s.identity[:, j].mean()
        ex = ret_prob_at_rho_k(k, 3.0, 2)
        se = math.sqrt(ex * (1 - ex) / 120_000)
        assert abs(p_hat - ex) <= 4 * se, f"k={k}"


def test_engine_matches_reference_walker():
    # same walk, independent sampler implementations: compare identity rates
    t = line_tables(lam=4.0)
    s = simulate_excursions(t, [2], 60_000, 99, EngineSpec(lamp_order=2))
    p_engine = s.identity[:, 0].mean()
    walk = BiasedZWalk(BiasParams(0.8))
    hits = 0
    n_ref = 4000
    for i in range(n_ref):
        stats = simulate_returns(2, walk, MU2, stream_rng(1234, i))
        hits += stats.id_returns[-1]
    p_ref = hits / n_ref
    se = math.sqrt(p_engine * (1 - p_engine) / 60_000 + p_ref * (1 - p_ref) / n_ref)
    assert abs(p_engine - p_ref) <= 4 * se


def test_engine_rho_mean_and_nplus():
    t = line_tables(lam=3.0)
    s = simulate_excursions(t, [100], 4000, 3, EngineSpec(lamp_order=2))
    mean_rho = s.rho[:, -1].mean() / 100
    assert abs(mean_rho - 3.0) <= 3 * math.sqrt(6.0 / (100 * 4000))
    # N_k+ ~ Binomial(k, 1/2)
    npl = s.n_plus[:, -1]
    assert abs(npl.mean() - 50.0) <= 3 * math.sqrt(25.0 / 4000)


def test_engine_range_equals_interval_on_line():
    t = line_tables(lam=2.0)
    s = simulate_excursions(t, [5], 2000, 8, EngineSpec(lamp_order=2, track_range=True))
    width = s.m_plus[:, -1] - s.m_minus[:, -1] + 1
    assert np.array_equal(s.range_size[:, -1], width)


def test_engine_nonuniform_measure():
    # biased-lazy symmetric measure on Z/3: still must match the exact law
    nu = SwitchMeasure(cyclic_group(3), ((0, 0.5), (1, 0.25), (2, 0.25)))
    t = line_tables(lam=4.0)
    from lamplighter.engine import spec_from_measure

    spec = spec_from_measure(nu)
    s = simulate_excursions(t, [1], 150_000, 6, spec)
    p_hat = s.identity[:, 0].mean()
    # oracle: average the local-time product over reference-simulated paths
    from lamplighter import ret_prob_given_local_times, switch_count_local_times

    walk = BiasedZWalk(BiasParams(0.8))
    vals = []
    for i in range(3000):
        stats = simulate_returns(1, walk, MU2, stream_rng(555, i))
        vals.append(ret_prob_given_local_times(switch_count_local_times(stats, 0), nu))
    want = np.mean(vals)
    se = math.sqrt(p_hat * (1 - p_hat) / 150_000 + np.var(vals) / len(vals))
    assert abs(p_hat - want) <= 4 * se


def test_truncation_abort_counted():
    t = line_tables(lam=1.5, radius=4)
    s = simulate_local_times(t, [3000], 400, 12, EngineSpec(lamp_order=2))
    n_boundary = int((s.aborted == eng.ABORT_BOUNDARY).sum())
    assert n_boundary > 0  # lambda 1.5 wanders past 4 almost surely in 3000 steps
    assert s.n_ok + n_boundary == 400


def test_budget_abort_counted():
    t = line_tables(lam=3.0)
    spec = EngineSpec(lamp_order=2, step_budget=5)
    s = simulate_excursions(t, [50], 300, 1, spec)
    assert int((s.aborted == eng.ABORT_BUDGET).sum()) > 0


def test_lampless_order_one():
    t = line_tables(lam=3.0)
    s = simulate_excursions(t, [4], 500, 2, EngineSpec(lamp_order=1))
    assert np.all(s.identity == 1)


def test_local_time_snapshots_monotone():
    t = line_tables(lam=4.0)
    s = simulate_local_times(t, [0, 10, 100, 400], 800, 9, EngineSpec(lamp_order=2))
    assert np.all(s.xi[:, 0] == 1)
    assert np.all(np.diff(s.xi, axis=1) >= 0)


def test_auto_radius_formula():
    assert auto_radius(3.0, 1e7) == max(16, math.ceil(40 * math.log(1e7) / math.log(3.0)))
    with pytest.raises(Exception):
        auto_radius(1.0, 1e6)


def test_walk_tables_cache_and_radius():
    cfg = WalkConfig(p=0.75, lamp_order=2)
    t1 = walk_tables(cfg, 1e6)
    t2 = walk_tables(cfg, 1e6)
    assert t1 is t2
    cfg_fixed = WalkConfig(p=0.75, lamp_order=2, radius=33)
    assert walk_tables(cfg_fixed, 1e6).graph.truncation_radius == 33
