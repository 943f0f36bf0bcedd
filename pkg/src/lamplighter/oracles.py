"""Brute-force oracles: exhaustive enumeration over all switch draws.

For a fixed base excursion path these enumerate every possible (U, V) draw
sequence, push each through the actual stepping code, and tally the exact
conditional probability of landing on the group identity.  The closed-form
conditional laws are checked against these tallies, not the other way round.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .dynamics import initial_state, ssw_step_forced
from .errors import ConfigError
from .lamps import SwitchMeasure, convolution_power_at_identity


def first_return_paths(max_len: int) -> list[tuple[int, ...]]:
    """All Z-paths 0 -> 0 of length <= max_len with no interior zero.

    Paths are (S_0, ..., S_l) with unit steps; l is even, 2 per sign at
    l = 2, 2*Catalan(l/2 - 1) in general.
    """
    if max_len < 2:
        raise ConfigError("first return needs at least 2 steps")
    out: list[tuple[int, ...]] = []

    def extend(path: list[int]) -> None:
        pos = path[-1]
        for step in (1, -1):
            nxt = pos + step
            if nxt == 0:
                out.append(tuple(path + [0]))
            elif len(path) < max_len and (nxt > 0) == (path[1] > 0):
                extend(path + [nxt])

    extend([0, 1])
    extend([0, -1])
    return sorted(p for p in out if len(p) - 1 <= max_len)


def exhaustive_return_prob(path: tuple[int, ...], measure: SwitchMeasure) -> float:
    """P(R = id | base path), by enumerating all switch draw sequences.

    Runs every draw tuple through ssw_step_forced, so the stepping code
    itself is under test.  Cost is |support|^(2*len) per path.
    """
    steps = len(path) - 1
    elems = [h for h, _ in measure.support]
    probs = dict(measure.support)
    total = 0.0
    for draws in itertools.product(elems, repeat=2 * steps):
        state = initial_state(measure, path[0])
        w = 1.0
        for t in range(steps):
            u, v = draws[2 * t], draws[2 * t + 1]
            w *= probs[u] * probs[v]
            ssw_step_forced(state, u, path[t + 1], v)
        if state.is_identity(path[0]):
            total += w
    return total


def exhaustive_lamp_distribution(path: tuple[int, ...], measure: SwitchMeasure) -> dict[tuple, float]:
    """Joint law of the final lamp vector over the visited window, enumerated."""
    steps = len(path) - 1
    window = sorted(set(path))
    elems = [h for h, _ in measure.support]
    probs = dict(measure.support)
    dist: dict[tuple, float] = {}
    for draws in itertools.product(elems, repeat=2 * steps):
        state = initial_state(measure, path[0])
        w = 1.0
        for t in range(steps):
            u, v = draws[2 * t], draws[2 * t + 1]
            w *= probs[u] * probs[v]
            ssw_step_forced(state, u, path[t + 1], v)
        key = tuple(state.lamps.get(g, 0) for g in window)
        dist[key] = dist.get(key, 0.0) + w
    return dist


def path_extremes_prediction(path: tuple[int, ...], lamp_order: int) -> float:
    """|F|^-(M+ - M- + 1): the closed-form conditional return probability."""
    return float(lamp_order) ** -(max(path) - min(path) + 1)


def path_local_time_prediction(path: tuple[int, ...], measure: SwitchMeasure) -> float:
    """Product of mu^{*2 xi(g)}(id) over visited g, xi counted over [0, rho)."""
    counts: dict[int, int] = {}
    for pos in path[:-1]:
        counts[pos] = counts.get(pos, 0) + 1
    prod = 1.0
    for c in counts.values():
        prod *= convolution_power_at_identity(measure, 2 * c)
    return prod


@dataclass
class OracleReport:
    """Per-path comparison of enumeration vs closed form."""

    paths: int
    max_abs_error: float
    failures: list[tuple[tuple[int, ...], float, float]]

    @property
    def ok(self) -> bool:
        return not self.failures


def check_return_prob_given_extremes(max_len: int, measure: SwitchMeasure, atol: float = 0.0) -> OracleReport:
    """Exhaustive check of the conditional law via path extremes (uniform measures)."""
    if not measure.is_uniform:
        raise ConfigError("extremes law holds for uniform switch measures")
    m = measure.group.order
    worst = 0.0
    failures = []
    paths = first_return_paths(max_len)
    for path in paths:
        got = exhaustive_return_prob(path, measure)
        want = path_extremes_prediction(path, m)
        err = abs(got - want)
        worst = max(worst, err)
        if err > atol:
            failures.append((path, got, want))
    return OracleReport(paths=len(paths), max_abs_error=worst, failures=failures)


def check_return_prob_given_local_times(max_len: int, measure: SwitchMeasure, atol: float = 1e-12) -> OracleReport:
    """Exhaustive check of the general conditional law via local times."""
    worst = 0.0
    failures = []
    paths = first_return_paths(max_len)
    for path in paths:
        got = exhaustive_return_prob(path, measure)
        want = path_local_time_prediction(path, measure)
        err = abs(got - want)
        worst = max(worst, err)
        if err > atol:
            failures.append((path, got, want))
    return OracleReport(paths=len(paths), max_abs_error=worst, failures=failures)


def check_lamp_uniformity(max_len: int, measure: SwitchMeasure, atol: float = 0.0) -> OracleReport:
    """Check that final lamps over the visited window are iid uniform, given the path."""
    if not measure.is_uniform:
        raise ConfigError("uniform lamp law holds for uniform switch measures")
    m = measure.group.order
    worst = 0.0
    failures = []
    paths = first_return_paths(max_len)
    for path in paths:
        dist = exhaustive_lamp_distribution(path, measure)
        window = max(path) - min(path) + 1
        want = float(m) ** -window
        if len(dist) != m**window:
            failures.append((path, float(len(dist)), float(m**window)))
            continue
        err = max(abs(p - want) for p in dist.values())
        worst = max(worst, err)
        if err > atol:
            failures.append((path, min(dist.values()), want))
    return OracleReport(paths=len(paths), max_abs_error=worst, failures=failures)
