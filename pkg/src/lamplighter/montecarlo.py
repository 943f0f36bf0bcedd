"""Estimators, confidence intervals, distribution tests, and phase scans."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import engine
from .engine import EngineSpec, GraphTables, auto_radius, simulate_excursions, simulate_local_times
from .errors import ConfigError
from .graphs import RootedGraph, build_gamma_m, build_line_graph
from .lamps import SwitchMeasure

#: Below this many observed successes an indicator estimate is reported as
#: inconclusive rather than as a (misleading) near-zero rate.
MIN_SUCCESSES = 30

#: Relative standard error above which a conditional estimate is inconclusive.
MAX_REL_STDERR = 0.25


@dataclass(frozen=True)
class WalkConfig:
    """One stationary-walk setup: base graph, drift, lamp group, run guards.

    Exactly one of ``p`` (Z-drift form) and ``lam`` (homesick form) is given;
    on the line they are the same walk via lam = p/(1-p).  ``lamp_order`` 1 is
    the degenerate lampless walk (every return is an identity return).
    """

    graph: str = "line"  # "line" | "gamma"
    gamma_m: int = 3
    p: float | None = None
    lam: float | None = None
    lamp_order: int = 2
    radius: int | None = None
    step_budget: int = engine.DEFAULT_BUDGET
    batch_size: int = engine.DEFAULT_BATCH
    threads: int | None = None

    def __post_init__(self):
        if (self.p is None) == (self.lam is None):
            raise ConfigError("give exactly one of p and lam")
        if self.p is not None and not (0.5 < self.p < 1.0):
            raise ConfigError("p must lie in (1/2, 1)")
        if self.lam is not None and self.lam < 1.0:
            raise ConfigError("lambda must be >= 1")
        if self.lamp_order < 1:
            raise ConfigError("lamp order must be >= 1")
        if self.graph not in ("line", "gamma"):
            raise ConfigError(f"unknown graph {self.graph!r}")
        if self.graph == "gamma" and self.gamma_m < 2:
            raise ConfigError("gamma graph needs m >= 2")

    @property
    def lambda_value(self) -> float:
        if self.lam is not None:
            return self.lam
        return self.p / (1.0 - self.p)


def _resolve_radius(config: WalkConfig, total_steps: float) -> int:
    if config.radius is not None:
        return config.radius
    return auto_radius(config.lambda_value, total_steps)


_TABLE_CACHE: dict = {}


def walk_tables(config: WalkConfig, total_steps: float) -> GraphTables:
    """Transition tables for the configured walk, truncated wide enough for the run."""
    radius = _resolve_radius(config, total_steps)
    key = (config.graph, config.gamma_m, round(config.lambda_value, 15), radius)
    tables = _TABLE_CACHE.get(key)
    if tables is None:
        if config.graph == "line":
            g = build_line_graph(radius)
        else:
            g = build_gamma_m(config.gamma_m, radius)
        tables = GraphTables(g, config.lambda_value)
        if len(_TABLE_CACHE) > 32:
            _TABLE_CACHE.clear()
        _TABLE_CACHE[key] = tables
    return tables


def engine_spec(config: WalkConfig, measure: SwitchMeasure | None = None, **kw) -> EngineSpec:
    base = dict(
        lamp_order=config.lamp_order,
        step_budget=config.step_budget,
        batch_size=config.batch_size,
        threads=config.threads,
    )
    base.update(kw)
    if measure is not None:
        return engine.spec_from_measure(measure, **{k: v for k, v in base.items() if k != "lamp_order"})
    return EngineSpec(**base)


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with standard error; aborted replicas reported separately."""

    estimate: float
    stderr: float
    replicas: int
    seed: int
    aborted: int = 0
    inconclusive: bool = False

    def within_sigma(self, target: float, n_sigma: float) -> bool:
        if self.stderr == 0.0:
            return self.estimate == target
        return abs(self.estimate - target) <= n_sigma * self.stderr


def estimate_return_prob(k: int, config: WalkConfig, replicas: int, seed: int) -> EstimateWithCI:
    """Fraction of replicas whose full state is the identity at the k-th return."""
    if replicas < 1:
        raise ConfigError("need replicas >= 1")
    if k < 1:
        raise ConfigError("need k >= 1")
    total = replicas * k * (2.2 * max(config.lambda_value, 1.5))
    tables = walk_tables(config, total)
    samples = simulate_excursions(tables, [k], replicas, seed, engine_spec(config))
    ok = samples.aborted == engine.OK
    n_ok = int(ok.sum())
    if n_ok == 0:
        return EstimateWithCI(float("nan"), float("nan"), 0, seed, aborted=replicas, inconclusive=True)
    hits = int(samples.identity[ok, -1].sum())
    p_hat = hits / n_ok
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / n_ok)
    return EstimateWithCI(
        estimate=p_hat,
        stderr=stderr,
        replicas=n_ok,
        seed=seed,
        aborted=replicas - n_ok,
        inconclusive=0 < hits < MIN_SUCCESSES,
    )


def estimate_local_time(n: int, config: WalkConfig, replicas: int, seed: int) -> EstimateWithCI:
    """Mean identity local time xi(id, n) over replicas."""
    if replicas < 1:
        raise ConfigError("need replicas >= 1")
    if n < 0:
        raise ConfigError("need n >= 0")
    if n == 0:
        return EstimateWithCI(1.0, 0.0, replicas, seed)
    tables = walk_tables(config, float(n) * replicas)
    samples = simulate_local_times(tables, [n], replicas, seed, engine_spec(config))
    ok = samples.aborted == engine.OK
    n_ok = int(ok.sum())
    if n_ok == 0:
        return EstimateWithCI(float("nan"), float("nan"), 0, seed, aborted=replicas, inconclusive=True)
    xi = samples.xi[ok, -1].astype(np.float64)
    mean = float(xi.mean())
    stderr = float(xi.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else 0.0
    return EstimateWithCI(mean, stderr, n_ok, seed, aborted=replicas - n_ok)


@dataclass(frozen=True)
class PowerFit:
    """Least-squares slope in log-log coordinates."""

    slope: float
    stderr: float
    intercept: float


def fit_power_exponent(points: Sequence[tuple[float, float]]) -> PowerFit:
    """Fit y ~ C x^slope by least squares on (log x, log y)."""
    if len(points) < 3:
        raise ConfigError("need at least 3 points")
    xs = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(np.diff(xs) <= 0):
        raise ConfigError("x values must be strictly increasing")
    if np.any(ys <= 0):
        raise ConfigError("y values must be positive for a power-law fit")
    lx, ly = np.log(xs), np.log(ys)
    n = lx.size
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    var = float(np.sum(resid**2) / (n - 2)) if n > 2 else 0.0
    return PowerFit(slope=slope, stderr=math.sqrt(var / sxx), intercept=intercept)


def empirical_cdf_distance(samples: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov-Smirnov sup distance between the empirical CDF and a reference.

    Tie-aware, so discrete references are handled correctly: at each distinct
    sample value the two one-sided gaps are F_hat(v) - F(v) and
    F(v) - F_hat(v-).
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.size == 0:
        raise ConfigError("need at least one sample")
    vals, counts = np.unique(s, return_counts=True)
    cum = np.cumsum(counts)
    n = s.size
    f = np.asarray(cdf(vals), dtype=np.float64)
    hi = np.max(cum / n - f)
    lo = np.max(f - (cum - counts) / n)
    return float(max(hi, lo))


def ks_critical_value(n: int, alpha: float = 0.001) -> float:
    """Asymptotic one-sample KS critical value sqrt(-ln(alpha/2) / (2n))."""
    return math.sqrt(-math.log(alpha / 2.0) / (2.0 * n))


def sample_excursion_maxima(config: WalkConfig, count: int, seed: int) -> np.ndarray:
    """Maxima of ``count`` positive excursions (the law tested against the closed CDF)."""
    if count < 1:
        raise ConfigError("need count >= 1")
    want = count
    got: list[np.ndarray] = []
    attempt = 0
    while want > 0 and attempt < 8:
        n_rep = int(2.3 * want) + 64
        total = n_rep * 2.2 * max(config.lambda_value, 1.5)
        tables = walk_tables(config, total)
        samples = simulate_excursions(
            tables, [1], n_rep, seed + attempt, engine_spec(config, track_lamps=False)
        )
        ok = (samples.aborted == engine.OK) & (samples.n_plus[:, 0] == 1)
        got.append(samples.m_plus[ok, 0])
        want = count - sum(g.size for g in got)
        attempt += 1
    out = np.concatenate(got)
    if out.size < count:
        raise RuntimeError("failed to collect the requested number of positive excursions")
    return out[:count]


@dataclass
class ScanPoint:
    """One (lambda, k) estimate inside a phase scan."""

    lam: float
    k: int
    estimate: float
    stderr: float
    replicas: int
    inconclusive: bool


@dataclass
class PhaseScanResult:
    """Per-lambda exponents of k -> P(R at rho_k = id) and the -1 crossing bracket."""

    lambdas: list[float]
    exponents: list[float]
    exponent_stderrs: list[float]
    inconclusive: list[bool]
    points: list[ScanPoint]
    bracket: tuple[float, float] | None
    seed: int
    estimator: str


def _k_grid(k_window: tuple[int, int], n_points: int) -> np.ndarray:
    lo, hi = k_window
    if not (1 <= lo < hi):
        raise ConfigError("bad k window")
    if hi < 10 * lo:
        raise ConfigError("k window must span at least one decade")
    ks = np.unique(np.round(np.geomspace(lo, hi, n_points)).astype(np.int64))
    return ks


def _group_means(values: np.ndarray, ok: np.ndarray, groups: int = 16) -> np.ndarray:
    """Per-group means over replicas (rows), for jackknife-style slope errors."""
    idx = np.nonzero(ok)[0]
    cut = np.array_split(idx, groups)
    return np.array([values[c].mean(axis=0) for c in cut if c.size > 0])


def phase_scan(
    grid: Sequence[float],
    config: WalkConfig,
    k_window: tuple[int, int],
    replicas: int,
    seed: int,
    n_points: int = 6,
    estimator: str = "conditional",
) -> PhaseScanResult:
    """Estimate the decay exponent of the identity-return probability per lambda.

    estimator "conditional" averages |F|^-|range| over simulated base paths
    (the exact conditional identity probability given the path); this stays
    informative deep into the transient regime where raw identity returns are
    rare events.  estimator "indicator" counts actual identity returns, with
    the < MIN_SUCCESSES inconclusive rule.  Points are never dropped
    silently: every (lambda, k) estimate is reported with its flag.
    """
    lambdas = sorted(float(x) for x in grid)
    if lambdas != list(grid):
        raise ConfigError("lambda grid must be sorted ascending")
    if estimator not in ("conditional", "indicator"):
        raise ConfigError(f"unknown estimator {estimator!r}")
    ks = _k_grid(k_window, n_points)
    F = config.lamp_order
    points: list[ScanPoint] = []
    exponents: list[float] = []
    exp_se: list[float] = []
    flags: list[bool] = []
    for li, lam in enumerate(lambdas):
        cfg = replace(config, lam=lam, p=None)
        total = replicas * float(ks[-1]) * 2.2 * max(lam, 1.5)
        tables = walk_tables(cfg, total)
        spec = engine_spec(
            cfg,
            track_lamps=(estimator == "indicator"),
            track_range=(estimator == "conditional"),
        )
        samples = simulate_excursions(tables, ks, replicas, seed + li, spec)
        ok = samples.aborted == engine.OK
        n_ok = int(ok.sum())
        est = np.full(ks.size, np.nan)
        se = np.full(ks.size, np.nan)
        point_bad = np.ones(ks.size, dtype=bool)
        gmeans = None
        if n_ok > 0:
            if estimator == "conditional":
                vals = float(F) ** -samples.range_size[ok].astype(np.float64)
                est = vals.mean(axis=0)
                se = vals.std(axis=0, ddof=1) / math.sqrt(n_ok)
                point_bad = ~(np.isfinite(est) & (est > 0) & (se <= MAX_REL_STDERR * est))
                gmeans = _group_means(float(F) ** -samples.range_size.astype(np.float64), ok)
            else:
                hits = samples.identity[ok].astype(np.float64)
                est = hits.mean(axis=0)
                se = np.sqrt(est * (1.0 - est) / n_ok)
                point_bad = hits.sum(axis=0) < MIN_SUCCESSES
                gmeans = _group_means(samples.identity.astype(np.float64), ok)
        for j, k in enumerate(ks):
            points.append(
                ScanPoint(
                    lam=lam,
                    k=int(k),
                    estimate=float(est[j]),
                    stderr=float(se[j]),
                    replicas=n_ok,
                    inconclusive=bool(point_bad[j]),
                )
            )
        good = ~point_bad
        if good.sum() < 3:
            exponents.append(float("nan"))
            exp_se.append(float("nan"))
            flags.append(True)
            continue
        fit = fit_power_exponent(list(zip(ks[good].tolist(), est[good].tolist())))
        slope_se = fit.stderr
        if gmeans is not None and gmeans.shape[0] >= 4:
            slopes = []
            for row in gmeans:
                if np.all(row[good] > 0):
                    gfit = fit_power_exponent(list(zip(ks[good].tolist(), row[good].tolist())))
                    slopes.append(gfit.slope)
            if len(slopes) >= 4:
                slope_se = float(np.std(slopes, ddof=1) / math.sqrt(len(slopes)))
        exponents.append(fit.slope)
        exp_se.append(slope_se)
        flags.append(False)
    bracket = None
    concl = [(lam, e) for lam, e, f in zip(lambdas, exponents, flags) if not f]
    for (l0, e0), (l1, e1) in zip(concl, concl[1:]):
        if e0 <= -1.0 < e1:
            bracket = (l0, l1)
            break
    return PhaseScanResult(
        lambdas=lambdas,
        exponents=exponents,
        exponent_stderrs=exp_se,
        inconclusive=flags,
        points=points,
        bracket=bracket,
        seed=seed,
        estimator=estimator,
    )
