"""Closed-form formulas and error-controlled series: the ground-truth layer.

Everything here is deterministic numerics.  Series over excursion maxima are
truncated with an explicit geometric tail bound; binomial weights and Catalan
numbers go through log-gamma, and near-one quantities are handled with
log1p/expm1 so large-k evaluations stay accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError
from .graphs import RootedGraph
from .lamps import SwitchMeasure, convolution_power_at_identity

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class PhaseParams:
    """Derived quantities of the walk on F wr Z at drift p with |F| lamps."""

    p: float
    lamp_order: int
    lam: float
    alpha: float
    p_critical: float
    mean_return_time: float
    mgf_domain_sup: float

    @property
    def regime(self) -> str:
        if self.p < self.p_critical:
            return "subcritical"
        if self.p == self.p_critical:
            return "critical"
        return "supercritical"


def phase_params(p: float, lamp_order: int) -> PhaseParams:
    """All derived phase quantities; rejects p outside (1/2, 1) and |F| < 2."""
    if not (0.5 < p < 1.0):
        raise ConfigError(f"p must lie in (1/2, 1), got {p}")
    if lamp_order < 2:
        raise ConfigError(f"lamp order must be >= 2, got {lamp_order}")
    lam = p / (1.0 - p)
    return PhaseParams(
        p=p,
        lamp_order=lamp_order,
        lam=lam,
        alpha=math.log(lamp_order) / math.log(lam),
        p_critical=lamp_order**2 / (lamp_order**2 + 1.0),
        mean_return_time=2.0 * p / (2.0 * p - 1.0),
        mgf_domain_sup=0.5 * math.log(1.0 / (4.0 * p * (1.0 - p))),
    )


def ret_prob_given_extremes(m_plus: int, m_minus: int, lamp_order: int) -> float:
    """|F|^-(M+ - M- + 1): return probability given the path extremes."""
    if m_plus < 0 or m_minus > 0:
        raise ConfigError("need M+ >= 0 >= M-")
    return float(lamp_order) ** -(m_plus - m_minus + 1)


def max_excursion_cdf(x: int, lam: float) -> float:
    """P(M1+ <= x | S_1 = 1) = 1 - (lam-1)/(lam^{x+1}-1) for lam > 1."""
    if lam <= 1.0:
        raise ConfigError("excursion maximum law needs lambda > 1")
    if x < 0:
        raise ConfigError("need x >= 0")
    return 1.0 - (lam - 1.0) / math.expm1((x + 1) * math.log(lam))


def max_excursion_pmf(xs: np.ndarray, lam: float) -> np.ndarray:
    """pmf of the positive-excursion maximum on x >= 1."""
    xs = np.asarray(xs)
    lo = np.array([max_excursion_cdf(int(x) - 1, lam) for x in xs.ravel()])
    hi = np.array([max_excursion_cdf(int(x), lam) for x in xs.ravel()])
    return (hi - lo).reshape(xs.shape)


class SeriesValue(NamedTuple):
    value: float
    terms: int


def _series_terms(lam: float, lamp_order: int, m_max: float, tol: float) -> int:
    """Series length A with geometric tail F^-A/(F-1) below tol * value.

    The value scales like m^-alpha, so A grows with log m; generous slack.
    """
    alpha = math.log(lamp_order) / math.log(lam)
    need = math.log(1.0 / tol) + alpha * math.log(max(m_max, 2.0)) + 20.0
    return max(8, int(math.ceil(need / math.log(lamp_order))) + 8)


def _one_minus_q(lam: float, n_terms: int) -> np.ndarray:
    """(lam-1)/(lam^a - 1) for a = 1..n_terms, overflow-safe."""
    a = np.arange(1, n_terms + 1, dtype=np.float64)
    with np.errstate(over="ignore"):
        return (lam - 1.0) / np.expm1(a * math.log(lam))


def _series_values(m: np.ndarray, lam: float, lamp_order: int, tol: float) -> tuple[np.ndarray, int]:
    """S(m) = sum_a F^-a (1 - (lam-1)/(lam^a-1))^m for a vector of m >= 0."""
    m = np.asarray(m, dtype=np.float64)
    n_terms = _series_terms(lam, lamp_order, float(m.max(initial=0.0)), tol)
    omq = _one_minus_q(lam, n_terms)
    with np.errstate(divide="ignore"):
        log_q = np.log1p(-np.minimum(omq, 1.0))  # -inf at a = 1
    log_w = -np.arange(1, n_terms + 1, dtype=np.float64) * math.log(lamp_order)
    with np.errstate(invalid="ignore"):
        log_terms = m[:, None] * log_q[None, :] + log_w[None, :]
    # m = 0 turns 0 * -inf into nan; q^0 = 1 exactly
    log_terms = np.where(np.isnan(log_terms), log_w[None, :], log_terms)
    return np.exp(log_terms).sum(axis=1), n_terms


def excursion_series(m: int, lam: float, lamp_order: int, tol: float = DEFAULT_TOL) -> SeriesValue:
    """The excursion-maximum series S(m), with its truncation point.

    Truncation rule: stop at A once the remaining geometric tail
    sum_{a>A} F^-a (which dominates the dropped terms since the bases are
    below 1) falls under tol times the partial sum.
    """
    if m < 0:
        raise ConfigError("need m >= 0")
    if lam <= 1.0:
        raise ConfigError("series needs lambda > 1")
    if tol <= 0.0:
        raise ConfigError("tol must be positive")
    logF = math.log(lamp_order)
    partial = 0.0
    a = 0
    while True:
        a += 1
        omq = (lam - 1.0) / math.expm1(a * math.log(lam))
        if m == 0:
            term = math.exp(-a * logF)
        elif omq >= 1.0:
            term = 0.0
        else:
            term = math.exp(-a * logF + m * math.log1p(-omq))
        partial += term
        tail = math.exp(-a * logF) / (lamp_order - 1.0)
        if partial > 0.0 and tail < tol * partial:
            return SeriesValue(value=partial, terms=a)
        if a > 100000:
            raise RuntimeError("series failed to converge")


def ret_prob_given_nplus(
    k: int, m_pos: int, lam: float, lamp_order: int, tol: float = DEFAULT_TOL
) -> float:
    """P(R at rho_k = id | N_k+ = m_pos): product of the two one-sided series."""
    if not (0 <= m_pos <= k):
        raise ConfigError("need 0 <= m_pos <= k")
    c = (lamp_order - 1.0) ** 2 / lamp_order
    s_pos = excursion_series(m_pos, lam, lamp_order, tol).value
    s_neg = excursion_series(k - m_pos, lam, lamp_order, tol).value
    return c * s_pos * s_neg


#: Above this k the binomial mixture restricts m to a window of +-16 sigma
#: around k/2; the discarded binomial tail is below 2 exp(-128).
_FULL_BINOMIAL_K = 4096


def _binomial_window(k: int) -> np.ndarray:
    if k <= _FULL_BINOMIAL_K:
        return np.arange(0, k + 1)
    half = int(math.ceil(16.0 * math.sqrt(k / 4.0)))
    lo = max(0, k // 2 - half)
    hi = min(k, k // 2 + half + 1)
    return np.arange(lo, hi)


def ret_prob_at_rho_k(k: int, lam: float, lamp_order: int, tol: float = DEFAULT_TOL) -> float:
    """P(R at rho_k = id): binomial mixture over the positive-excursion count.

    Weights Binom(k, 1/2) are evaluated in log space; all terms are positive
    so the sum needs no cancellation care.
    """
    if k < 1:
        raise ConfigError("need k >= 1")
    ms = _binomial_window(k)
    s_all, _ = _series_values(np.concatenate([ms, k - ms]), lam, lamp_order, tol)
    s_m = s_all[: ms.size]
    s_km = s_all[ms.size :]
    log_w = gammaln(k + 1) - gammaln(ms + 1) - gammaln(k - ms + 1) - k * math.log(2.0)
    c = (lamp_order - 1.0) ** 2 / lamp_order
    return float(c * np.sum(np.exp(log_w) * s_m * s_km))


def _pair_grid(lam: float, lamp_order: int, k_max: float, tol: float):
    """Weights and bases of the double-series form of the binomial mixture.

    Averaging the binomial mixture term by term gives
        P(k) = c * sum_{a,b} F^-(a+b) ((q_a + q_b)/2)^k,
    an exact reordering (all terms positive).  Returns (weights, base,
    one_minus_base) on the (a, b) grid.
    """
    n_terms = _series_terms(lam, lamp_order, k_max, tol) + 8
    omq = np.minimum(_one_minus_q(lam, n_terms), 1.0)
    w = np.exp(-np.arange(1, n_terms + 1, dtype=np.float64) * math.log(lamp_order))
    ww = np.outer(w, w)
    one_minus_base = 0.5 * (omq[:, None] + omq[None, :])
    return ww, 1.0 - one_minus_base, one_minus_base


def ret_prob_at_rho_k_series(k: int, lam: float, lamp_order: int, tol: float = DEFAULT_TOL) -> float:
    """Double-series form of ret_prob_at_rho_k (cross-check and fast path)."""
    if k < 1:
        raise ConfigError("need k >= 1")
    ww, base, omb = _pair_grid(lam, lamp_order, float(k), tol)
    with np.errstate(divide="ignore"):
        log_base = np.log1p(-omb)
    powk = np.where(omb >= 1.0, 0.0, np.exp(k * log_base))
    c = (lamp_order - 1.0) ** 2 / lamp_order
    return float(c * np.sum(ww * powk))


def local_time_partial_sum(k: int, lam: float, lamp_order: int, tol: float = DEFAULT_TOL) -> float:
    """E[xi(id, rho_k)] = 1 + sum_{j<=k} P(R at rho_j = id).

    Summing the double-series form over j gives a geometric series per (a, b)
    pair, so the whole partial sum collapses to one pass over the grid; this
    is an exact exchange of positive sums, checked against direct summation
    in the tests.
    """
    if k < 0:
        raise ConfigError("need k >= 0")
    if k == 0:
        return 1.0
    ww, base, omb = _pair_grid(lam, lamp_order, float(k), tol)
    with np.errstate(divide="ignore"):
        log_base = np.log1p(-omb)
    # sum_{j=1..k} base^j = base * (1 - base^k) / (1 - base)
    with np.errstate(invalid="ignore"):
        one_minus_powk = -np.expm1(k * log_base)
    one_minus_powk = np.where(omb >= 1.0, 1.0, one_minus_powk)
    geom = np.where(omb >= 1.0, 0.0, base * one_minus_powk / omb)
    c = (lamp_order - 1.0) ** 2 / lamp_order
    return 1.0 + float(c * np.sum(ww * geom))


def rho1_pmf(t: int, p: float) -> float:
    """P(rho_1 = 2t) = Catalan(t-1) p^t (1-p)^(t-1), in log space."""
    if t < 1:
        raise ConfigError("need t >= 1")
    if not (0.0 < p < 1.0):
        raise ConfigError("need 0 < p < 1")
    log_catalan = gammaln(2 * t - 1) - 2.0 * gammaln(t) - math.log(t)
    return float(np.exp(log_catalan + t * math.log(p) + (t - 1) * math.log1p(-p)))


def mgf_rho1(s: float, p: float) -> float:
    """E[exp(s rho_1)], defined for s below (1/2) log(1/(4p(1-p)))."""
    if not (0.0 < p < 1.0):
        raise ConfigError("need 0 < p < 1")
    s0 = 0.5 * math.log(1.0 / (4.0 * p * (1.0 - p)))
    if s >= s0:
        raise ConfigError(f"mgf defined for s < {s0}, got {s}")
    return (1.0 - math.sqrt(1.0 - 4.0 * p * (1.0 - p) * math.exp(2.0 * s))) / (2.0 * (1.0 - p))


def escape_prob_bound(graph: RootedGraph, lam: float, r: int) -> float:
    """Upper bound on P(the walk reaches distance r before returning to the root).

    (1/deg o) / sum_{i<r} lambda^i / |edge boundary of B_i|; exact (not just a
    bound) on graphs whose spheres are equipotential by symmetry, e.g. the
    line and the split-line family.
    """
    if r < 1:
        raise ConfigError("need r >= 1")
    if r > graph.radius:
        raise ConfigError(f"r={r} beyond available ball data (radius {graph.radius})")
    root_deg = len(graph.adj[graph.root])
    total = 0.0
    for i in range(r):
        total += lam**i / graph.edge_boundary_size(i)
    return 1.0 / (root_deg * total)


def range_lower_tail_bound(
    k: int,
    lam: float,
    deg_root: int,
    ball_size_fn: Callable[[int], int],
    c: float,
) -> tuple[int, float]:
    """(N, exp(-N/8)) bounding P(|range at rho_k| <= N/4) for recurrent walks.

    N = min(|B_{c log k / log lam}|, floor((lam-1)/deg_root * k^(1-c))).
    Valid for k >= (5(lam-1)/deg_root)^(1/c).
    """
    if not (0.0 < c < 1.0):
        raise ConfigError("need 0 < c < 1")
    if lam <= 1.0:
        raise ConfigError("need lambda > 1")
    k_min = (5.0 * (lam - 1.0) / deg_root) ** (1.0 / c)
    if k < k_min:
        raise ConfigError(f"bound valid for k >= {k_min:.3f}, got {k}")
    r = int(math.floor(c * math.log(k) / math.log(lam)))
    n_ball = ball_size_fn(r)
    n_floor = int(math.floor((lam - 1.0) / deg_root * k ** (1.0 - c)))
    n = min(n_ball, n_floor)
    return n, math.exp(-n / 8.0)


def ret_prob_given_local_times(local_times: Mapping, measure: SwitchMeasure) -> float:
    """Product of mu^{*2 xi(g)}(id) over the visited vertices.

    ``local_times`` maps vertices to their half-open local times (the count
    over [0, rho_k), which is what governs the number of switch draws each
    lamp absorbs).  Empty mapping gives the empty product, 1.
    """
    prod = 1.0
    for g, c in local_times.items():
        if c <= 0:
            raise ConfigError(f"local time at {g!r} must be positive")
        prod *= convolution_power_at_identity(measure, 2 * int(c))
    return prod
