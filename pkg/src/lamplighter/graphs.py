"""Base-group walks: the biased walk on Z and homesick walks on rooted graphs.

Graphs here are finite truncations of infinite graphs.  A graph built with a
truncation radius treats its outermost shell as a hard boundary: transition
queries there raise TruncationError, and simulations must abort (visibly)
if a walk touches it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, TruncationError

Vertex = Hashable


@dataclass(frozen=True)
class BiasParams:
    """Drift parameter p in (1/2, 1) for the biased walk on Z."""

    p: float

    def __post_init__(self):
        if not (0.5 < self.p < 1.0):
            raise ConfigError(f"drift p must lie in (1/2, 1), got {self.p}")
        lam = self.lam
        if abs(self.p - lam / (lam + 1.0)) > 1e-12:
            raise ConfigError("p <-> lambda round trip failed")

    @property
    def lam(self) -> float:
        return self.p / (1.0 - self.p)


@dataclass(frozen=True)
class HomesickParams:
    """Homeward bias lambda >= 1; lambda = 1 is the simple random walk."""

    lam: float

    def __post_init__(self):
        if not (self.lam >= 1.0):
            raise ConfigError(f"lambda must be >= 1, got {self.lam}")

    @property
    def p_line(self) -> float:
        """Equivalent drift on Z: p = lambda/(lambda+1)."""
        return self.lam / (self.lam + 1.0)


def bias_from_lambda(lam: float) -> BiasParams:
    if not (lam > 1.0):
        raise ConfigError("biased Z walk needs lambda > 1")
    return BiasParams(lam / (lam + 1.0))


def biased_step_distribution(x: int, params: BiasParams) -> dict[int, float]:
    """Transition law of the origin-drifting walk on Z at position x."""
    p = params.p
    if x == 0:
        return {-1: 0.5, 1: 0.5}
    if x > 0:
        return {x - 1: p, x + 1: 1.0 - p}
    return {x + 1: p, x - 1: 1.0 - p}


class RootedGraph:
    """Locally finite rooted graph with precomputed distance layering.

    Vertices are hashable labels; internally everything is index-based.
    Construction runs one breadth-first pass and caches, per vertex, the
    neighbors at smaller distance (count j) and the rest (count k), so each
    homesick transition query is O(deg).
    """

    def __init__(
        self,
        labels: Sequence[Vertex],
        edges: Iterable[tuple[Vertex, Vertex]],
        root: Vertex,
        truncation_radius: int | None = None,
        projection: dict[Vertex, int] | None = None,
        max_degree: int | None = None,
    ):
        self.labels = list(labels)
        self.index = {v: i for i, v in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ConfigError("duplicate vertex labels")
        if root not in self.index:
            raise ConfigError(f"root {root!r} not among vertices")
        n = len(self.labels)
        adj: list[list[int]] = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            iu, iv = self.index[u], self.index[v]
            if iu == iv:
                raise ConfigError(f"self-loop at {u!r}")
            key = (min(iu, iv), max(iu, iv))
            if key in seen:
                continue
            seen.add(key)
            adj[iu].append(iv)
            adj[iv].append(iu)
        self.adj = adj
        self.root = self.index[root]
        self.truncation_radius = truncation_radius

        dist = np.full(n, -1, dtype=np.int64)
        dist[self.root] = 0
        frontier = [self.root]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if dist[w] < 0:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
            frontier = nxt
        if np.any(dist < 0):
            raise ConfigError("graph is not connected to the root")
        self.dist = dist

        degs = np.array([len(a) for a in adj])
        if np.any(degs == 0):
            raise ConfigError("isolated vertex")
        self.max_degree = int(degs.max()) if max_degree is None else max_degree
        if degs.max() > self.max_degree:
            raise ConfigError("declared max degree exceeded")

        # distance coherence across edges; closer/other neighbor split
        self.closer: list[list[int]] = []
        self.other: list[list[int]] = []
        for u in range(n):
            cl, ot = [], []
            for w in adj[u]:
                if abs(int(dist[u]) - int(dist[w])) > 1:
                    raise ConfigError("edge spans more than one distance level")
                (cl if dist[w] == dist[u] - 1 else ot).append(w)
            if u != self.root and not cl:
                raise ConfigError("non-root vertex with no neighbor closer to the root")
            self.closer.append(cl)
            self.other.append(ot)

        if projection is not None:
            self.proj = np.array([projection[v] for v in self.labels], dtype=np.int64)
            if np.any(np.abs(self.proj) != self.dist):
                raise ConfigError("projection inconsistent with distances")
        else:
            self.proj = None

        radius = int(dist.max())
        counts = np.bincount(dist, minlength=radius + 1)
        self._sphere = counts
        self._ball = np.cumsum(counts)
        bnd = np.zeros(radius, dtype=np.int64)
        for u in range(n):
            for w in adj[u]:
                if dist[w] == dist[u] + 1:
                    bnd[dist[u]] += 1
        self._edge_boundary = bnd

    # -- queries ---------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def radius(self) -> int:
        return int(self.dist.max())

    @property
    def root_label(self) -> Vertex:
        return self.labels[self.root]

    def degree(self, v: Vertex) -> int:
        return len(self.adj[self.index[v]])

    def neighbors(self, v: Vertex) -> list[Vertex]:
        return [self.labels[w] for w in self.adj[self.index[v]]]

    def distance(self, v: Vertex) -> int:
        return int(self.dist[self.index[v]])

    def is_boundary(self, v: Vertex) -> bool:
        if self.truncation_radius is None:
            return False
        return self.distance(v) >= self.truncation_radius

    def ball_size(self, r: int) -> int:
        """|B_r|; callers floor non-integer radii."""
        if r < 0:
            return 0
        return int(self._ball[min(r, self.radius)])

    def sphere_size(self, r: int) -> int:
        if r < 0 or r > self.radius:
            return 0
        return int(self._sphere[r])

    def edge_boundary_size(self, r: int) -> int:
        """Number of edges from B_r to its complement."""
        if not (0 <= r < self.radius):
            raise ConfigError(f"edge boundary undefined at r={r} (radius {self.radius})")
        return int(self._edge_boundary[r])


def homesick_transition(graph: RootedGraph, v: Vertex, params: HomesickParams) -> dict[Vertex, float]:
    """Transition law of the lambda-homesick walk at v.

    Neighbors one level closer to the root get weight lambda each, all other
    neighbors weight 1.  Boundary vertices of a truncated graph have no
    well-defined law (their outside neighbors are missing) and raise.
    """
    if v not in graph.index:
        raise ConfigError(f"vertex {v!r} not in graph")
    if graph.is_boundary(v):
        raise TruncationError(f"transition queried at truncation boundary vertex {v!r}")
    i = graph.index[v]
    j = len(graph.closer[i])
    k = len(graph.other[i])
    denom = params.lam * j + k
    out: dict[Vertex, float] = {}
    for w in graph.closer[i]:
        out[graph.labels[w]] = params.lam / denom
    for w in graph.other[i]:
        out[graph.labels[w]] = 1.0 / denom
    return out


def edge_resistance(graph: RootedGraph, u: Vertex, v: Vertex, lam: float) -> float:
    """Resistance lambda^{min(d(u), d(v))} of the homesick walk's network."""
    du, dv = graph.distance(u), graph.distance(v)
    return lam ** min(du, dv)


def build_line_graph(radius: int) -> RootedGraph:
    """Path graph on {-radius..radius} rooted at 0 (the Cayley graph window of Z)."""
    if radius < 1:
        raise ConfigError("line graph needs radius >= 1")
    labels = list(range(-radius, radius + 1))
    edges = [(x, x + 1) for x in range(-radius, radius)]
    proj = {x: x for x in labels}
    return RootedGraph(labels, edges, 0, truncation_radius=radius, projection=proj, max_degree=2)


def _gamma_split_positions(radius: int) -> list[int]:
    out = []
    s = 2
    while s <= radius:
        out.append(s)
        s *= 2
    return out


def build_gamma_m(m: int, radius: int) -> RootedGraph:
    """The line with every vertex at distance 2^i (i >= 1) split into m copies.

    Split copies (x, j) for x = +-2^i keep the adjacencies of x, so each copy
    has degree 2 while the vertices straddled by two split levels (+-3) reach
    degree 2m.  The projection maps a copy back to its line position.
    """
    if m < 2:
        raise ConfigError("gamma graph needs m >= 2")
    if radius < 2:
        raise ConfigError("gamma graph needs radius >= 2")
    split = set(_gamma_split_positions(radius))

    def expand(x: int) -> list[Vertex]:
        if abs(x) in split:
            return [(x, j) for j in range(1, m + 1)]
        return [x]

    labels: list[Vertex] = []
    proj: dict[Vertex, int] = {}
    for x in range(-radius, radius + 1):
        for v in expand(x):
            labels.append(v)
            proj[v] = x
    edges = []
    for x in range(-radius, radius):
        for u in expand(x):
            for v in expand(x + 1):
                edges.append((u, v))
    return RootedGraph(labels, edges, 0, truncation_radius=radius, projection=proj, max_degree=2 * m)


def load_edge_list(lines: Iterable[str]) -> RootedGraph:
    """Graph from an edge-list text: root label on the first line, then 'u v' pairs.

    The loaded graph is taken as complete (no truncation boundary).
    """
    it = iter(lines)
    root = None
    edges: list[tuple[str, str]] = []
    for raw in it:
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if root is None:
            root = s
            continue
        parts = s.split()
        if len(parts) != 2:
            raise ConfigError(f"bad edge line {raw!r}")
        edges.append((parts[0], parts[1]))
    if root is None:
        raise ConfigError("empty edge-list input")
    labels = {root}
    for u, v in edges:
        labels.add(u)
        labels.add(v)
    return RootedGraph(sorted(labels), edges, root)


def load_edge_list_file(path: str) -> RootedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return load_edge_list(fh)
