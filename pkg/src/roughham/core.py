"""Shared value types: multi-indices, uniform grids and trajectories."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement, permutations
from typing import Iterator, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside an operation's domain."""


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector of the monomial ``h^a0 (dX^1)^a1 ... (dX^d)^ad``."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        if any(e < 0 for e in entries):
            raise DomainError(f"negative entry in multi-index {entries}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        return cls(tuple(int(tok) for tok in text.split(",")))

    @classmethod
    def unit(cls, d: int, l: int) -> "MultiIndex":
        entries = [0] * (d + 1)
        entries[l] = 1
        return cls(tuple(entries))

    @property
    def d(self) -> int:
        return len(self.entries) - 1

    @property
    def order(self) -> int:
        return sum(self.entries)

    @property
    def theta(self) -> Fraction:
        """Mean-square grade ``a0 + (a1 + ... + ad) / 2``, kept exact."""
        return self.entries[0] + Fraction(sum(self.entries[1:]), 2)

    @property
    def i_alpha(self) -> int:
        for l, e in enumerate(self.entries):
            if e >= 1:
                return l
        raise DomainError("all-zero multi-index has no leading component")

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, l: int) -> int:
        return self.entries[l]

    def __str__(self) -> str:
        return ",".join(str(e) for e in self.entries)

    def sort_key(self) -> tuple:
        # grade first, then descending lexicographic so (1,0) precedes (0,1)
        return (self.order,) + tuple(-e for e in self.entries)

    def monomial(self, row: np.ndarray) -> np.ndarray:
        """Evaluate ``prod_l row[l] ** entries[l]`` (broadcasts over trailing axes)."""
        row = np.asarray(row)
        out = np.ones(row.shape[1:], dtype=row.dtype)
        for l, e in enumerate(self.entries):
            if e:
                out = out * row[l] ** e
        return out


def multi_indices_up_to(d: int, order_cap: int) -> list[MultiIndex]:
    """All ``alpha`` in N^(d+1) with ``1 <= |alpha| <= order_cap``, graded-lex ordered."""
    if d < 1 or order_cap < 1:
        raise DomainError(f"need d >= 1 and order_cap >= 1, got d={d}, cap={order_cap}")
    return list(_indices_cached(d, order_cap))


@lru_cache(maxsize=None)
def _indices_cached(d: int, order_cap: int) -> tuple[MultiIndex, ...]:
    out = []
    for k in range(1, order_cap + 1):
        for combo in combinations_with_replacement(range(d + 1), k):
            entries = [0] * (d + 1)
            for l in combo:
                entries[l] += 1
            out.append(MultiIndex(tuple(entries)))
    out.sort(key=MultiIndex.sort_key)
    return tuple(out)


def indices_of_order(d: int, k: int) -> list[MultiIndex]:
    return [a for a in _indices_cached(d, k) if a.order == k]


def index_stats(alpha: MultiIndex) -> tuple[int, Fraction, int]:
    """Return ``(|alpha|, theta(alpha), i(alpha))``."""
    if alpha.order < 1:
        raise DomainError("index_stats needs |alpha| >= 1")
    return alpha.order, alpha.theta, alpha.i_alpha


def ordered_decompositions(alpha: MultiIndex, parts: int) -> Iterator[tuple[MultiIndex, ...]]:
    """Ordered tuples of ``parts`` nonzero indices summing to ``alpha`` componentwise."""
    yield from _decompositions_cached(alpha, parts)


@lru_cache(maxsize=None)
def _decompositions_cached(alpha: MultiIndex, parts: int) -> tuple[tuple[MultiIndex, ...], ...]:
    if parts == 1:
        return ((alpha,),) if alpha.order >= 1 else ()
    out = []
    for first in _sub_indices(alpha):
        rest = MultiIndex(tuple(a - b for a, b in zip(alpha.entries, first.entries)))
        if rest.order < parts - 1:
            continue
        for tail in _decompositions_cached(rest, parts - 1):
            out.append((first,) + tail)
    return tuple(out)


def _sub_indices(alpha: MultiIndex) -> Iterator[MultiIndex]:
    ranges = [range(e + 1) for e in alpha.entries]
    for entries in np.ndindex(*[len(r) for r in ranges]):
        if sum(entries) >= 1:
            yield MultiIndex(tuple(int(e) for e in entries))


def unit_sequences(alpha: MultiIndex) -> list[tuple[int, ...]]:
    """Ordered sequences ``(l_1, ..., l_k)`` whose multiset of components is ``alpha``.

    These are the ordered decompositions of ``alpha`` into order-one indices,
    identified by the component each part points to.
    """
    return list(_unit_sequences_cached(alpha))


@lru_cache(maxsize=None)
def _unit_sequences_cached(alpha: MultiIndex) -> tuple[tuple[int, ...], ...]:
    base = [l for l, e in enumerate(alpha.entries) for _ in range(e)]
    return tuple(sorted(set(permutations(base))))


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``t_n = n h`` on ``[0, t_end]``."""

    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise DomainError(f"n_steps must be positive, got {self.n_steps}")
        if not self.t_end > 0:
            raise DomainError(f"t_end must be positive, got {self.t_end}")

    @property
    def h(self) -> float:
        return self.t_end / self.n_steps

    @property
    def times(self) -> np.ndarray:
        t = np.arange(self.n_steps + 1) * self.h
        t[-1] = self.t_end
        return t

    def coarsen(self, factor: int) -> "Grid":
        if factor < 1 or self.n_steps % factor:
            raise DomainError(f"factor {factor} does not divide n_steps={self.n_steps}")
        return Grid(self.t_end, self.n_steps // factor)


@dataclass(frozen=True)
class Trajectory:
    """States at every grid node; ``states`` has shape ``(n_steps + 1, 2m, *batch)``."""

    grid: Grid
    states: np.ndarray

    def __post_init__(self):
        if self.states.shape[0] != self.grid.n_steps + 1:
            raise DomainError(
                f"expected {self.grid.n_steps + 1} states, got {self.states.shape[0]}"
            )

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def as_phase_point(y: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Coerce to an array of shape ``(2m, *batch)`` and check the leading dimension."""
    arr = np.asarray(y)
    if not np.issubdtype(arr.dtype, np.complexfloating):
        arr = arr.astype(float)
    if arr.ndim == 0 or arr.shape[0] % 2:
        raise DomainError(f"phase point must have even leading dimension, got {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DomainError(f"phase point has dimension {arr.shape[0]}, system expects {dim}")
    return arr
