"""Lamp groups, switch measures, and convolution powers.

Lamp elements are plain Python ints: residues 0..m-1 for the cyclic group
Z/mZ, arbitrary ints for the integer group Z.  Both are abelian, which covers
every experiment in scope (recurrence depends on the lamp group only through
its order, so cyclic groups suffice among finite groups).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import ConfigError

CYCLIC = "cyclic"
INTEGERS = "integers"

#: Convolution entries below this are dropped (underflow guard for integer
#: supports, whose length grows with the power).
CONV_TRUNCATION = 1e-300

#: Relative tolerance for probability comparisons (normalization, symmetry).
PROB_RTOL = 1e-12


@dataclass(frozen=True)
class LampGroup:
    """A lamp group: cyclic of order ``m >= 2``, or the integers."""

    kind: str
    order: int | None = None

    def __post_init__(self):
        if self.kind == CYCLIC:
            if self.order is None or self.order < 2:
                raise ConfigError(f"cyclic lamp group needs order >= 2, got {self.order}")
        elif self.kind == INTEGERS:
            if self.order is not None:
                raise ConfigError("integer lamp group has no order")
        else:
            raise ConfigError(f"unknown lamp group kind {self.kind!r}")

    @property
    def identity(self) -> int:
        return 0

    def compose(self, a: int, b: int) -> int:
        if self.kind == CYCLIC:
            return (a + b) % self.order
        return a + b

    def inverse(self, a: int) -> int:
        if self.kind == CYCLIC:
            return (-a) % self.order
        return -a

    def elements(self) -> Iterator[int]:
        if self.kind != CYCLIC:
            raise ConfigError("cannot enumerate the integer lamp group")
        return iter(range(self.order))


def cyclic_group(order: int) -> LampGroup:
    return LampGroup(CYCLIC, order)


def integer_group() -> LampGroup:
    return LampGroup(INTEGERS)


@dataclass(frozen=True)
class SwitchMeasure:
    """Finitely supported symmetric non-degenerate probability measure.

    ``support`` maps lamp elements to probabilities in (0, 1].  Validated at
    construction: normalization (relative tolerance 1e-12), symmetry
    mu(h) == mu(-h), and non-degeneracy (the support generates the group).
    Immutable and safe to share across workers.
    """

    group: LampGroup
    support: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if not self.support:
            raise ConfigError("empty measure support")
        sup = dict(self.support)
        if len(sup) != len(self.support):
            raise ConfigError("duplicate elements in measure support")
        if self.group.kind == CYCLIC:
            m = self.group.order
            if any(not (0 <= h < m) for h in sup):
                raise ConfigError("cyclic support elements must lie in 0..m-1")
        total = math.fsum(sup.values())
        if abs(total - 1.0) > PROB_RTOL:
            raise ConfigError(f"support probabilities sum to {total!r}, not 1")
        for h, p in sup.items():
            if not (0.0 < p <= 1.0):
                raise ConfigError(f"probability {p!r} for element {h} outside (0,1]")
            q = sup.get(self.group.inverse(h))
            if q is None or abs(p - q) > PROB_RTOL * max(p, q):
                raise ConfigError(f"measure not symmetric at element {h}")
        if not self._generates(sup):
            raise ConfigError("support does not generate the lamp group")
        # canonical order so equal measures hash equal
        object.__setattr__(self, "support", tuple(sorted(sup.items())))

    def _generates(self, sup: dict[int, float]) -> bool:
        if self.group.kind == CYCLIC:
            g = self.group.order
            for h in sup:
                g = math.gcd(g, h)
            return g == 1
        return any(h != 0 for h in sup)

    def prob(self, h: int) -> float:
        return dict(self.support).get(h, 0.0)

    @property
    def elements(self) -> np.ndarray:
        return np.array([h for h, _ in self.support], dtype=np.int64)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.support], dtype=np.float64)

    @property
    def is_uniform(self) -> bool:
        if self.group.kind != CYCLIC:
            return False
        m = self.group.order
        return len(self.support) == m and all(abs(p - 1.0 / m) <= PROB_RTOL for _, p in self.support)

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw lamp elements; deterministic given the rng state."""
        u = rng.random(size)
        idx = np.searchsorted(np.cumsum(self.probabilities), u, side="right")
        idx = np.minimum(idx, len(self.support) - 1)  # guard fp edge at u ~ 1
        out = self.elements[idx]
        return int(out) if size is None else out


def make_uniform_measure(group: LampGroup) -> SwitchMeasure:
    """Uniform switch measure on a cyclic lamp group."""
    if group.kind != CYCLIC:
        raise ConfigError("no uniform measure on an infinite lamp group")
    m = group.order
    return SwitchMeasure(group, tuple((h, 1.0 / m) for h in range(m)))


def sample_switch(measure: SwitchMeasure, rng: np.random.Generator) -> int:
    """One lamp increment drawn from the measure."""
    return measure.sample(rng)


# -- convolution powers -------------------------------------------------------
#
# Distributions are dense float arrays: index h for Z/mZ, offset-indexed for Z.
# Powers use repeated squaring, so mu^{*n}(id) costs O(log n) convolutions.


def _cyclic_dist(measure: SwitchMeasure) -> np.ndarray:
    v = np.zeros(measure.group.order)
    for h, p in measure.support:
        v[h] = p
    return v


def _cyclic_convolve(a: np.ndarray, b: np.ndarray, m: int) -> np.ndarray:
    full = np.convolve(a, b)
    out = np.zeros(m)
    np.add.at(out, np.arange(full.size) % m, full)
    return out


def _int_dist(measure: SwitchMeasure) -> tuple[int, np.ndarray]:
    elems = [h for h, _ in measure.support]
    lo, hi = min(elems), max(elems)
    v = np.zeros(hi - lo + 1)
    for h, p in measure.support:
        v[h - lo] = p
    return lo, v


def _int_convolve(a: tuple[int, np.ndarray], b: tuple[int, np.ndarray]) -> tuple[int, np.ndarray]:
    lo = a[0] + b[0]
    v = np.convolve(a[1], b[1])
    keep = np.nonzero(v >= CONV_TRUNCATION)[0]
    if keep.size == 0:
        return lo, np.zeros(1)
    return lo + int(keep[0]), v[keep[0] : keep[-1] + 1]


@lru_cache(maxsize=4096)
def _conv_power_cached(measure: SwitchMeasure, n: int):
    if measure.group.kind == CYCLIC:
        m = measure.group.order
        acc = None
        sq = _cyclic_dist(measure)
        k = n
        while k:
            if k & 1:
                acc = sq.copy() if acc is None else _cyclic_convolve(acc, sq, m)
            k >>= 1
            if k:
                sq = _cyclic_convolve(sq, sq, m)
        return acc
    acc = None
    sq = _int_dist(measure)
    k = n
    while k:
        if k & 1:
            acc = sq if acc is None else _int_convolve(acc, sq)
        k >>= 1
        if k:
            sq = _int_convolve(sq, sq)
    return acc


def convolution_power(measure: SwitchMeasure, n: int) -> dict[int, float]:
    """Full distribution of the n-fold convolution power, as a dict."""
    if n < 0:
        raise ConfigError("convolution power needs n >= 0")
    if n == 0:
        return {measure.group.identity: 1.0}
    if measure.group.kind == CYCLIC:
        v = _conv_power_cached(measure, n)
        return {h: float(p) for h, p in enumerate(v) if p > 0.0}
    lo, v = _conv_power_cached(measure, n)
    return {lo + i: float(p) for i, p in enumerate(v) if p > 0.0}


def convolution_power_at_identity(measure: SwitchMeasure, n: int) -> float:
    """mu^{*n}(id); 1 for n = 0, and identically 1/m for uniform cyclic measures."""
    if n < 0:
        raise ConfigError("convolution power needs n >= 0")
    if n == 0:
        return 1.0
    if measure.is_uniform:
        return 1.0 / measure.group.order
    if measure.group.kind == CYCLIC:
        return float(_conv_power_cached(measure, n)[0])
    lo, v = _conv_power_cached(measure, n)
    if not (lo <= 0 < lo + v.size):
        return 0.0
    return float(v[-lo])
