"""The stationary walk itself: sparse lamp state and switch-walk-switch steps.

This is the reference implementation: one walker, dict-based lamp
configuration, usable with any base walk and any switch measure.  Heavy
Monte Carlo runs use the vectorized engine instead; both are validated
against the exhaustive oracles in :mod:`lamplighter.oracles`.

Lamp updates always use the group-multiplication rule (the lamp at the old
and new positions is multiplied on the right by fresh draws U, V).  For a
uniform measure on a finite group this has the same law as overwriting the
two lamps, so one code path covers both formulations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from .errors import ConfigError, StepBudgetError, TruncationError
from .graphs import BiasParams, HomesickParams, RootedGraph, homesick_transition
from .lamps import SwitchMeasure

Vertex = Hashable

DEFAULT_STEP_BUDGET = 10**9


class BiasedZWalk:
    """Origin-drifting base walk on untruncated Z."""

    def __init__(self, params: BiasParams):
        self.params = params
        self.root: Vertex = 0

    def step(self, x: int, rng: np.random.Generator) -> int:
        u = rng.random()
        if x == 0:
            return 1 if u < 0.5 else -1
        toward = x - 1 if x > 0 else x + 1
        away = x + 1 if x > 0 else x - 1
        return toward if u < self.params.p else away

    def projection(self, x: int) -> int:
        return x

    def distance(self, x: int) -> int:
        return abs(x)


class HomesickGraphWalk:
    """Homesick base walk on a rooted graph, transition tables cached per vertex."""

    def __init__(self, graph: RootedGraph, params: HomesickParams):
        self.graph = graph
        self.params = params
        self.root = graph.root_label
        self._cache: dict[Vertex, tuple[list[Vertex], np.ndarray]] = {}

    def _table(self, v: Vertex) -> tuple[list[Vertex], np.ndarray]:
        tab = self._cache.get(v)
        if tab is None:
            dist = homesick_transition(self.graph, v, self.params)
            nbrs = list(dist)
            tab = (nbrs, np.cumsum([dist[w] for w in nbrs]))
            self._cache[v] = tab
        return tab

    def step(self, v: Vertex, rng: np.random.Generator) -> Vertex:
        nbrs, cum = self._table(v)
        u = rng.random()
        return nbrs[int(np.searchsorted(cum, u, side="right"))]

    def projection(self, v: Vertex) -> int | None:
        if self.graph.proj is None:
            return None
        return int(self.graph.proj[self.graph.index[v]])

    def distance(self, v: Vertex) -> int:
        return self.graph.distance(v)


BaseWalk = BiasedZWalk | HomesickGraphWalk


@dataclass
class WalkerState:
    """Lamplighter element: sparse lamp configuration plus base position.

    ``lamps`` stores only non-identity lamps, so the identity test is O(1):
    the state is the group identity iff the dict is empty and the walker sits
    at the root.
    """

    measure: SwitchMeasure
    position: Vertex
    lamps: dict[Vertex, int] = field(default_factory=dict)
    steps: int = 0

    def is_identity(self, root: Vertex) -> bool:
        return self.position == root and not self.lamps

    def multiply_lamp(self, g: Vertex, h: int) -> None:
        group = self.measure.group
        cur = self.lamps.get(g, group.identity)
        new = group.compose(cur, h)
        if new == group.identity:
            self.lamps.pop(g, None)
        else:
            self.lamps[g] = new


def initial_state(measure: SwitchMeasure, root: Vertex) -> WalkerState:
    return WalkerState(measure=measure, position=root)


def ssw_step_forced(state: WalkerState, u: int, move_to: Vertex, v: int) -> WalkerState:
    """One switch-walk-switch step with prescribed draws (oracle hook)."""
    state.multiply_lamp(state.position, u)
    state.position = move_to
    state.multiply_lamp(state.position, v)
    state.steps += 1
    return state


def ssw_step(state: WalkerState, walk: BaseWalk, measure: SwitchMeasure, rng: np.random.Generator) -> WalkerState:
    """One step: refresh lamp here, move in the base, refresh lamp there.

    Draw order is fixed (U, move, V) so runs are reproducible per seed.
    """
    u = measure.sample(rng)
    new_pos = walk.step(state.position, rng)
    if isinstance(walk, HomesickGraphWalk) and walk.graph.is_boundary(new_pos):
        raise TruncationError(f"walk touched truncation boundary at {new_pos!r}")
    v = measure.sample(rng)
    return ssw_step_forced(state, u, new_pos, v)


@dataclass
class ExcursionRecord:
    """Summary of one excursion (root to first return)."""

    length: int
    sign: int  # +1 / -1 by signed projection; 0 if the graph has none
    max_proj: int  # max projection, or max distance when no projection
    min_proj: int
    visits: dict[Vertex, int]  # arrivals during the excursion (final root arrival included)
    identity_at_return: bool


def run_excursion(
    state: WalkerState,
    walk: BaseWalk,
    measure: SwitchMeasure,
    rng: np.random.Generator,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> tuple[WalkerState, ExcursionRecord]:
    """Advance the walk from the root until its first return to the root."""
    if state.position != walk.root:
        raise ConfigError("excursion must start at the root")
    visits: dict[Vertex, int] = {}
    sign = 0
    max_proj = 0
    min_proj = 0
    length = 0
    while True:
        ssw_step(state, walk, measure, rng)
        length += 1
        if length > step_budget:
            raise StepBudgetError(f"excursion exceeded step budget {step_budget}")
        pos = state.position
        visits[pos] = visits.get(pos, 0) + 1
        pr = walk.projection(pos)
        if pr is None:
            pr = walk.distance(pos)
        if length == 1:
            sign = 1 if pr > 0 else (-1 if pr < 0 else 0)
        max_proj = max(max_proj, pr)
        min_proj = min(min_proj, pr)
        if pos == walk.root:
            break
    return state, ExcursionRecord(
        length=length,
        sign=sign,
        max_proj=max_proj,
        min_proj=min_proj,
        visits=visits,
        identity_at_return=state.is_identity(walk.root),
    )


@dataclass
class ExcursionStats:
    """Folded record of k excursions.

    Local times use the closed convention: xi(g) counts t in [0, rho_k] with
    the base walk at g, so the root's count is k + 1 and the counts total
    rho_k + 1.
    """

    k: int
    rho: list[int]
    m_plus: int
    m_minus: int
    n_plus: int
    n_minus: int
    local_times: dict[Vertex, int]
    id_returns: list[bool]

    @property
    def range_size(self) -> int:
        return len(self.local_times)

    @property
    def range_vertices(self) -> set[Vertex]:
        return set(self.local_times)

    @property
    def id_return_count(self) -> int:
        return sum(self.id_returns)


def simulate_returns(
    k: int,
    walk: BaseWalk,
    measure: SwitchMeasure,
    rng: np.random.Generator,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> ExcursionStats:
    """Run k excursions from the identity, folding the running statistics."""
    if k < 1:
        raise ConfigError("need k >= 1 excursions")
    state = initial_state(measure, walk.root)
    local: dict[Vertex, int] = {walk.root: 1}  # the t = 0 visit
    rho: list[int] = []
    id_returns: list[bool] = []
    t = 0
    m_plus = m_minus = 0
    n_plus = n_minus = 0
    for _ in range(k):
        state, rec = run_excursion(state, walk, measure, rng, step_budget=step_budget)
        t += rec.length
        rho.append(t)
        id_returns.append(rec.identity_at_return)
        if rec.sign > 0:
            n_plus += 1
        elif rec.sign < 0:
            n_minus += 1
        m_plus = max(m_plus, rec.max_proj)
        m_minus = min(m_minus, rec.min_proj)
        for g, c in rec.visits.items():
            local[g] = local.get(g, 0) + c
    return ExcursionStats(
        k=k,
        rho=rho,
        m_plus=m_plus,
        m_minus=m_minus,
        n_plus=n_plus,
        n_minus=n_minus,
        local_times=local,
        id_returns=id_returns,
    )


def switch_count_local_times(stats: ExcursionStats, root: Vertex) -> dict[Vertex, int]:
    """Local times over [0, rho_k), the counts that govern the lamp law.

    Each visit of g contributes two switch draws to the lamp at g except the
    final arrival at the root, which contributes only the closing switch; so
    the per-lamp draw count is twice the half-open local time.
    """
    out = dict(stats.local_times)
    out[root] -= 1
    if out[root] == 0:
        del out[root]
    return out


@dataclass
class LocalTimeResult:
    """Identity local time of a single run of n steps."""

    n: int
    xi_identity: int
    root_visits: int
    range_size: int
    final_identity: bool


def local_time_run(
    n: int,
    walk: BaseWalk,
    measure: SwitchMeasure,
    rng: np.random.Generator,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> LocalTimeResult:
    """Count visits of the full lamplighter state to the identity in steps 0..n."""
    if n < 0:
        raise ConfigError("need n >= 0")
    if n > step_budget:
        raise StepBudgetError(f"run length {n} exceeds step budget {step_budget}")
    state = initial_state(measure, walk.root)
    xi = 1  # R_0 = id
    root_visits = 1
    visited = {walk.root}
    for _ in range(n):
        ssw_step(state, walk, measure, rng)
        visited.add(state.position)
        if state.position == walk.root:
            root_visits += 1
            if state.is_identity(walk.root):
                xi += 1
    return LocalTimeResult(
        n=n,
        xi_identity=xi,
        root_visits=root_visits,
        range_size=len(visited),
        final_identity=state.is_identity(walk.root),
    )
