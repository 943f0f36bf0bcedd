"""Vectorized batched simulator for homesick lamplighter walks on finite graphs.

Replicas advance in lockstep inside fixed-size batches; each batch owns a
counter-based rng stream, so results are reproducible bit for bit no matter
how many worker threads process the batches.  Lamp configurations live in a
dense (batch, vertices) byte array with a per-replica non-identity counter,
making the group-identity test O(1) per step.

The walk semantics (switch-walk-switch with right lamp multiplication) match
the reference implementation in :mod:`lamplighter.dynamics`; the test suite
checks the two against each other and against the exhaustive oracles.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .graphs import RootedGraph
from .lamps import SwitchMeasure
from .streams import stream_rng

OK = 0
ABORT_BOUNDARY = 1
ABORT_BUDGET = 2

DEFAULT_BATCH = 8192
DEFAULT_BUDGET = 10**9

_SALT_EXCURSION = 1
_SALT_TIME = 2


def thread_count(requested: int | None = None) -> int:
    """Worker count, capped by the LAMPLIGHTER_THREADS environment variable."""
    cap = os.environ.get("LAMPLIGHTER_THREADS")
    cap_n = max(1, int(cap)) if cap else None
    if requested is None:
        return cap_n or 1
    n = max(1, requested)
    return min(n, cap_n) if cap_n else n


def auto_radius(lam: float, total_steps: float) -> int:
    """Truncation radius making boundary hits negligible for a whole run.

    Uses radius >= 40 log(total steps)/log lambda, far past the point where
    the reach probability (lambda - 1)/lambda^r times the step count is
    measurable.  Requires lambda > 1 (no recurrent window exists otherwise).
    """
    if lam <= 1.0:
        raise ConfigError("auto radius needs lambda > 1; pass an explicit radius")
    t = max(total_steps, 100.0)
    return max(16, int(math.ceil(40.0 * math.log(t) / math.log(lam))))


class GraphTables:
    """Flat transition tables of the homesick walk on a rooted graph."""

    def __init__(self, graph: RootedGraph, lam: float):
        if lam < 1.0:
            raise ConfigError("lambda must be >= 1")
        self.graph = graph
        self.lam = lam
        n = graph.n_vertices
        dmax = max(len(a) for a in graph.adj)
        nbr = np.zeros((n, dmax), dtype=np.int32)
        cdf = np.ones((n, dmax), dtype=np.float64)
        for v in range(n):
            if graph.truncation_radius is not None and graph.dist[v] >= graph.truncation_radius:
                nbr[v, :] = v  # boundary rows are never stepped from
                continue
            closer = graph.closer[v]
            other = graph.other[v]
            j, k = len(closer), len(other)
            denom = lam * j + k
            probs = [lam / denom] * j + [1.0 / denom] * k
            row = closer + other
            nbr[v, : len(row)] = row
            nbr[v, len(row) :] = v
            cdf[v, : len(row)] = np.cumsum(probs)
            cdf[v, len(row) - 1] = 1.0  # exact top despite fp roundoff
        self.nbr = nbr
        self.cdf = cdf
        self.dist = graph.dist.astype(np.int32)
        self.proj = None if graph.proj is None else graph.proj.astype(np.int64)
        self.root = graph.root
        self.n_vertices = n
        self.trunc = graph.truncation_radius


@dataclass(frozen=True)
class EngineSpec:
    """What to simulate per replica and what to record."""

    lamp_order: int = 2
    lamp_elements: tuple[int, ...] | None = None  # non-uniform cyclic measure:
    lamp_cdf: tuple[float, ...] | None = None  # elements + cumulative probs
    track_lamps: bool = True
    track_range: bool = False
    step_budget: int = DEFAULT_BUDGET
    batch_size: int = DEFAULT_BATCH
    threads: int | None = None

    def __post_init__(self):
        if self.lamp_order < 1 or self.lamp_order > 250:
            raise ConfigError("engine supports cyclic lamp orders 1..250")
        if self.batch_size < 1:
            raise ConfigError("batch size must be positive")
        if (self.lamp_elements is None) != (self.lamp_cdf is None):
            raise ConfigError("lamp_elements and lamp_cdf go together")


def spec_from_measure(measure: SwitchMeasure, **kw) -> EngineSpec:
    """EngineSpec drawing lamp switches from a (cyclic) SwitchMeasure."""
    if measure.group.kind != "cyclic":
        raise ConfigError("the vectorized engine handles cyclic lamp groups only")
    if measure.is_uniform:
        return EngineSpec(lamp_order=measure.group.order, **kw)
    return EngineSpec(
        lamp_order=measure.group.order,
        lamp_elements=tuple(int(h) for h, _ in measure.support),
        lamp_cdf=tuple(float(c) for c in np.cumsum(measure.probabilities)),
        **kw,
    )


@dataclass
class ExcursionSamples:
    """Per-replica snapshots at each excursion count in ``grid``.

    A snapshot column g is valid for replica r iff the replica completed
    grid[g] excursions before aborting: aborted[r] == OK guarantees all
    columns.  rho is the return time, m_plus/m_minus the running projection
    extremes (max distance and 0 when the graph has no signed projection),
    n_plus the positive-excursion count, range_size the visited-vertex count
    (-1 if untracked), identity whether the full lamplighter state equals the
    group identity at that return, id_count how many of the first grid[g]
    returns were identity returns.
    """

    grid: np.ndarray
    rho: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray
    n_plus: np.ndarray
    range_size: np.ndarray
    identity: np.ndarray
    id_count: np.ndarray
    aborted: np.ndarray

    @property
    def n_ok(self) -> int:
        return int(np.sum(self.aborted == OK))


@dataclass
class LocalTimeSamples:
    """Per-replica identity local times at each step count in ``grid``."""

    grid: np.ndarray
    xi: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray
    n_plus: np.ndarray
    range_size: np.ndarray
    aborted: np.ndarray

    @property
    def n_ok(self) -> int:
        return int(np.sum(self.aborted == OK))


def _draw_lamp(rng: np.random.Generator, n: int, spec: EngineSpec, elems, cdf) -> np.ndarray:
    if elems is None:
        return rng.integers(0, spec.lamp_order, size=n, dtype=np.int64)
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    idx = np.minimum(idx, len(elems) - 1)
    return elems[idx]


def _lamp_mult(lamps: np.ndarray, nonid: np.ndarray, rows: np.ndarray, cols: np.ndarray, delta: np.ndarray, m: int):
    old = lamps[rows, cols].astype(np.int64)
    new = (old + delta) % m
    lamps[rows, cols] = new.astype(np.uint8)
    nonid[rows] += (new != 0).astype(np.int32) - (old != 0).astype(np.int32)


def _batch_sizes(replicas: int, batch: int) -> list[int]:
    full, rem = divmod(replicas, batch)
    return [batch] * full + ([rem] if rem else [])


def _run_batches(worker, replicas: int, spec: EngineSpec):
    sizes = _batch_sizes(replicas, spec.batch_size)
    n_threads = thread_count(spec.threads)
    if n_threads <= 1 or len(sizes) <= 1:
        for b, size in enumerate(sizes):
            worker(b, size)
        return
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        futures = [pool.submit(worker, b, size) for b, size in enumerate(sizes)]
        for f in futures:
            f.result()


def simulate_excursions(
    tables: GraphTables,
    grid: Sequence[int],
    replicas: int,
    seed: int,
    spec: EngineSpec,
) -> ExcursionSamples:
    """Run replicas until grid[-1] root returns each, snapshotting at each grid value."""
    grid = np.asarray(sorted(set(int(g) for g in grid)), dtype=np.int64)
    if grid.size == 0 or grid[0] < 1:
        raise ConfigError("excursion grid needs positive excursion counts")
    if replicas < 1:
        raise ConfigError("need replicas >= 1")
    k_final = int(grid[-1])
    G = grid.size
    R = replicas

    out_rho = np.zeros((R, G), dtype=np.int64)
    out_mp = np.zeros((R, G), dtype=np.int32)
    out_mm = np.zeros((R, G), dtype=np.int32)
    out_np = np.zeros((R, G), dtype=np.int32)
    out_rng = np.full((R, G), -1, dtype=np.int32)
    out_id = np.zeros((R, G), dtype=np.uint8)
    out_idc = np.zeros((R, G), dtype=np.int32)
    out_ab = np.zeros(R, dtype=np.uint8)

    elems = None if spec.lamp_elements is None else np.asarray(spec.lamp_elements, dtype=np.int64)
    cdf = None if spec.lamp_cdf is None else np.asarray(spec.lamp_cdf, dtype=np.float64)
    lamps_on = spec.track_lamps and spec.lamp_order > 1
    nv = tables.n_vertices
    root = tables.root
    proj = tables.proj
    dist = tables.dist

    def worker(b: int, size: int):
        rng = stream_rng(seed, b, _SALT_EXCURSION)
        base = b * spec.batch_size
        pos = np.full(size, root, dtype=np.int32)
        exc = np.zeros(size, dtype=np.int64)
        steps = np.zeros(size, dtype=np.int64)
        mplus = np.zeros(size, dtype=np.int32)
        mminus = np.zeros(size, dtype=np.int32)
        nplus = np.zeros(size, dtype=np.int32)
        idc = np.zeros(size, dtype=np.int32)
        ab = np.zeros(size, dtype=np.uint8)
        nonid = np.zeros(size, dtype=np.int32)
        lamps = np.zeros((size, nv), dtype=np.uint8) if lamps_on else None
        if spec.track_range:
            visited = np.zeros((size, nv), dtype=np.uint8)
            visited[:, root] = 1
            rcount = np.ones(size, dtype=np.int32)
        act = np.arange(size)
        while act.size:
            n = act.size
            p = pos[act]
            if lamps_on:
                u = _draw_lamp(rng, n, spec, elems, cdf)
                _lamp_mult(lamps, nonid, act, p, u, spec.lamp_order)
            uu = rng.random(n)
            slot = (uu[:, None] >= tables.cdf[p]).sum(axis=1)
            newp = tables.nbr[p, slot]
            if lamps_on:
                v = _draw_lamp(rng, n, spec, elems, cdf)
                _lamp_mult(lamps, nonid, act, newp, v, spec.lamp_order)
            steps[act] += 1
            if proj is not None:
                pr = proj[newp].astype(np.int32)
                from_root = p == root
                nplus[act] += (from_root & (pr > 0)).astype(np.int32)
                mplus[act] = np.maximum(mplus[act], pr)
                mminus[act] = np.minimum(mminus[act], pr)
            else:
                mplus[act] = np.maximum(mplus[act], dist[newp])
            if spec.track_range:
                fresh = visited[act, newp] == 0
                if fresh.any():
                    visited[act[fresh], newp[fresh]] = 1
                    rcount[act] += fresh.astype(np.int32)
            pos[act] = newp
            if tables.trunc is not None:
                hit = dist[newp] >= tables.trunc
                if hit.any():
                    ab[act[hit]] = ABORT_BOUNDARY
            at_root = newp == root
            if at_root.any():
                rows = act[at_root]
                exc[rows] += 1
                ident = (nonid[rows] == 0) if lamps_on else np.ones(rows.size, dtype=bool)
                idc[rows] += ident.astype(np.int32)
                e = exc[rows]
                gi = np.searchsorted(grid, e)
                hit = (gi < G) & (grid[np.minimum(gi, G - 1)] == e)
                if hit.any():
                    rr = rows[hit]
                    gg = gi[hit]
                    orow = base + rr
                    out_rho[orow, gg] = steps[rr]
                    out_mp[orow, gg] = mplus[rr]
                    out_mm[orow, gg] = mminus[rr]
                    out_np[orow, gg] = nplus[rr]
                    out_id[orow, gg] = ident[hit].astype(np.uint8)
                    out_idc[orow, gg] = idc[rr]
                    if spec.track_range:
                        out_rng[orow, gg] = rcount[rr]
            over = (steps[act] >= spec.step_budget) & (exc[act] < k_final) & (ab[act] == OK)
            if over.any():
                ab[act[over]] = ABORT_BUDGET
            alive = (ab[act] == OK) & (exc[act] < k_final)
            act = act[alive]
        out_ab[base : base + size] = ab

    _run_batches(worker, replicas, spec)
    return ExcursionSamples(
        grid=grid,
        rho=out_rho,
        m_plus=out_mp,
        m_minus=out_mm,
        n_plus=out_np,
        range_size=out_rng,
        identity=out_id,
        id_count=out_idc,
        aborted=out_ab,
    )


def simulate_local_times(
    tables: GraphTables,
    grid: Sequence[int],
    replicas: int,
    seed: int,
    spec: EngineSpec,
) -> LocalTimeSamples:
    """Run replicas for grid[-1] steps, snapshotting xi(id, n) at each grid value."""
    grid = np.asarray(sorted(set(int(g) for g in grid)), dtype=np.int64)
    if grid.size == 0 or grid[0] < 0:
        raise ConfigError("time grid needs non-negative step counts")
    if replicas < 1:
        raise ConfigError("need replicas >= 1")
    n_final = int(grid[-1])
    if n_final > spec.step_budget:
        raise ConfigError("grid exceeds step budget")
    G = grid.size
    R = replicas

    out_xi = np.zeros((R, G), dtype=np.int64)
    out_mp = np.zeros((R, G), dtype=np.int32)
    out_mm = np.zeros((R, G), dtype=np.int32)
    out_np = np.zeros((R, G), dtype=np.int32)
    out_rng = np.full((R, G), -1, dtype=np.int32)
    out_ab = np.zeros(R, dtype=np.uint8)

    elems = None if spec.lamp_elements is None else np.asarray(spec.lamp_elements, dtype=np.int64)
    cdf = None if spec.lamp_cdf is None else np.asarray(spec.lamp_cdf, dtype=np.float64)
    lamps_on = spec.track_lamps and spec.lamp_order > 1
    nv = tables.n_vertices
    root = tables.root
    proj = tables.proj
    dist = tables.dist

    def worker(b: int, size: int):
        rng = stream_rng(seed, b, _SALT_TIME)
        base = b * spec.batch_size
        pos = np.full(size, root, dtype=np.int32)
        xi = np.ones(size, dtype=np.int64)  # R_0 = id
        mplus = np.zeros(size, dtype=np.int32)
        mminus = np.zeros(size, dtype=np.int32)
        nplus = np.zeros(size, dtype=np.int32)
        ab = np.zeros(size, dtype=np.uint8)
        nonid = np.zeros(size, dtype=np.int32)
        lamps = np.zeros((size, nv), dtype=np.uint8) if lamps_on else None
        if spec.track_range:
            visited = np.zeros((size, nv), dtype=np.uint8)
            visited[:, root] = 1
            rcount = np.ones(size, dtype=np.int32)

        def snapshot(gi: int):
            live = ab == OK
            rows = base + np.nonzero(live)[0]
            out_xi[rows, gi] = xi[live]
            out_mp[rows, gi] = mplus[live]
            out_mm[rows, gi] = mminus[live]
            out_np[rows, gi] = nplus[live]
            if spec.track_range:
                out_rng[rows, gi] = rcount[live]

        gi = 0
        if grid[0] == 0:
            snapshot(0)
            gi = 1
        act = np.arange(size)
        for t in range(1, n_final + 1):
            if act.size:
                n = act.size
                p = pos[act]
                if lamps_on:
                    u = _draw_lamp(rng, n, spec, elems, cdf)
                    _lamp_mult(lamps, nonid, act, p, u, spec.lamp_order)
                uu = rng.random(n)
                slot = (uu[:, None] >= tables.cdf[p]).sum(axis=1)
                newp = tables.nbr[p, slot]
                if lamps_on:
                    v = _draw_lamp(rng, n, spec, elems, cdf)
                    _lamp_mult(lamps, nonid, act, newp, v, spec.lamp_order)
                if proj is not None:
                    pr = proj[newp].astype(np.int32)
                    from_root = p == root
                    nplus[act] += (from_root & (pr > 0)).astype(np.int32)
                    mplus[act] = np.maximum(mplus[act], pr)
                    mminus[act] = np.minimum(mminus[act], pr)
                else:
                    mplus[act] = np.maximum(mplus[act], dist[newp])
                if spec.track_range:
                    fresh = visited[act, newp] == 0
                    if fresh.any():
                        visited[act[fresh], newp[fresh]] = 1
                        rcount[act] += fresh.astype(np.int32)
                pos[act] = newp
                if tables.trunc is not None:
                    hit = dist[newp] >= tables.trunc
                    if hit.any():
                        ab[act[hit]] = ABORT_BOUNDARY
                at_root = newp == root
                if at_root.any():
                    rows = act[at_root]
                    if lamps_on:
                        xi[rows] += (nonid[rows] == 0).astype(np.int64)
                    else:
                        xi[rows] += 1
                act = act[ab[act] == OK]
            while gi < G and grid[gi] == t:
                snapshot(gi)
                gi += 1
        out_ab[base : base + size] = ab

    _run_batches(worker, replicas, spec)
    return LocalTimeSamples(
        grid=grid,
        xi=out_xi,
        m_plus=out_mp,
        m_minus=out_mm,
        n_plus=out_np,
        range_size=out_rng,
        aborted=out_ab,
    )
