"""The finite hierarchical lattice: sites of the box at a given mesh.

A site is the coset ``x + (L**-r Z_p)^d`` of a point ``x`` of the box
``{|x| <= L**s}``.  Each coordinate carries the digits ``a_j`` for
``j in [-l*s, -l*r)``; there are ``depth = l*(s - r)`` of them.

Sites are numbered in mixed radix ``P = p**d``.  Group ``t`` (the coefficient
of ``P**t``) holds the digits at index ``j = -l*r - 1 - t`` of all ``d``
coordinates interleaved as ``sum_c a^(c)_j p**c``.  Fine digits sit in the
low groups, so a ball of level ``m`` (radius ``p**(l*r + m)``) is the
contiguous index block ``[b * P**m, (b + 1) * P**m)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .padic import DEFAULT_PRECISION, PadicPoint, PadicScalar, PrecisionError

__all__ = [
    "MAX_SITES",
    "LatticeError",
    "LatticeSpec",
    "BallRef",
    "Shell",
    "site_count",
    "cell_volume",
    "site_to_point",
    "point_to_site",
    "site_digits",
    "format_site",
    "distance_level",
    "distance_levels",
    "ultra_distance",
    "parent",
    "children",
    "ball_of_site",
    "sites_in_ball",
    "shell_sizes",
]

# index must stay addressable; materialized arrays are guarded separately
MAX_SITES = 2**40


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    """Box ``Lambda_s`` at mesh ``L**r`` with ``L = p**l``."""

    p: int
    l: int
    d: int
    r: int
    s: int

    def __post_init__(self):
        if self.p < 2:
            raise LatticeError(f"p must be a prime >= 2, got {self.p}")
        if self.l < 1 or self.d < 1:
            raise LatticeError("l and d must be positive")
        if not self.r < self.s:
            raise LatticeError(f"need r < s, got r={self.r}, s={self.s}")
        if self.p ** (self.d * self.depth) > MAX_SITES:
            raise LatticeError(f"{self.p}^{self.d * self.depth} sites exceed the guard {MAX_SITES}")

    @cached_property
    def L(self) -> int:
        return self.p**self.l

    @cached_property
    def depth(self) -> int:
        return self.l * (self.s - self.r)

    @cached_property
    def branching(self) -> int:
        return self.p**self.d

    @cached_property
    def n_sites(self) -> int:
        return self.p ** (self.d * self.depth)

    @property
    def cell_volume(self) -> float:
        return float(self.p) ** (self.d * self.l * self.r)

    def distance(self, m: int) -> float:
        """Distance between sites whose smallest common ball has level ``m >= 1``."""
        return float(self.p) ** (self.l * self.r + m)

    def replace(self, **changes) -> LatticeSpec:
        return LatticeSpec(**{**asdict(self), **changes})

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict | str) -> LatticeSpec:
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(**{k: int(obj[k]) for k in ("p", "l", "d", "r", "s")})


@dataclass(frozen=True)
class BallRef:
    level: int
    index: int


class Shell(NamedTuple):
    level: int
    distance: float
    per_site: int
    pairs: int


def site_count(spec: LatticeSpec) -> int:
    return spec.n_sites


def cell_volume(spec: LatticeSpec) -> float:
    """Haar measure of one mesh cell; ``site_count * cell_volume = p**(d*l*s)``."""
    return spec.cell_volume


def _check_site(spec: LatticeSpec, i: int) -> None:
    if not 0 <= i < spec.n_sites:
        raise LatticeError(f"site {i} outside [0, {spec.n_sites})")


def site_digits(spec: LatticeSpec, i: int) -> list[list[int]]:
    """Per coordinate, the digits ``a_j`` for ``j = -l*s, ..., -l*r - 1``."""
    _check_site(spec, i)
    p, P, depth = spec.p, spec.branching, spec.depth
    out = [[0] * depth for _ in range(spec.d)]
    for t in range(depth):
        g = (i // P**t) % P
        for c in range(spec.d):
            out[c][depth - 1 - t] = (g // p**c) % p
    return out


def format_site(spec: LatticeSpec, i: int) -> str:
    """Digit strings per coordinate, most negative index first."""
    return ",".join("".join(str(a) if a < 10 else chr(55 + a) for a in row) for row in site_digits(spec, i))


def site_to_point(spec: LatticeSpec, i: int, precision: int = DEFAULT_PRECISION) -> PadicPoint:
    """Canonical representative: digits supported on ``[-l*s, -l*r)``."""
    if precision < spec.depth:
        raise LatticeError("precision must cover the lattice depth")
    p = spec.p
    coords = []
    for row in site_digits(spec, i):
        n = _row_int(row, p)
        coords.append(PadicScalar.from_int(n, p, precision).shift(-spec.l * spec.s))
    return PadicPoint(tuple(coords))


def _row_int(row: list[int], p: int) -> int:
    # row[k] is the digit at offset k above -l*s
    n = 0
    for a in reversed(row):
        n = n * p + a
    return n


def point_to_site(spec: LatticeSpec, x: PadicPoint) -> int:
    """Quotient map; digits at indices ``>= -l*r`` are discarded."""
    if x.d != spec.d or x.prime != spec.p:
        raise LatticeError("point does not match the lattice (d or p)")
    lo, hi = -spec.l * spec.s, -spec.l * spec.r
    p, P, depth = spec.p, spec.branching, spec.depth
    i = 0
    for c, xc in enumerate(x.coords):
        if xc.is_zero:
            continue
        if xc.valuation < lo:
            raise LatticeError("point lies outside the box")
        for j in range(max(lo, xc.valuation), hi):
            try:
                a = xc.digit(j)
            except PrecisionError as exc:
                raise LatticeError(f"coordinate {c} is not known to index {hi - 1}") from exc
            t = hi - 1 - j
            i += a * p**c * P**t
    assert 0 <= i < P**depth
    return i


def distance_level(spec: LatticeSpec, i: int, j: int) -> int:
    """Lowest tree level holding both sites (0 iff ``i == j``)."""
    _check_site(spec, i)
    _check_site(spec, j)
    P, m = spec.branching, 0
    while i != j:
        i //= P
        j //= P
        m += 1
    return m


def distance_levels(spec: LatticeSpec, i, j) -> np.ndarray:
    """Vectorized :func:`distance_level` over integer arrays."""
    i, j = np.broadcast_arrays(np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64))
    i, j = i.copy(), j.copy()
    m = np.zeros(i.shape, dtype=np.int64)
    P = spec.branching
    for _ in range(spec.depth):
        diff = i != j
        m += diff
        i //= P
        j //= P
    return m


def ultra_distance(spec: LatticeSpec, i: int, j: int) -> float:
    m = distance_level(spec, i, j)
    return 0.0 if m == 0 else spec.distance(m)


def _check_level(spec: LatticeSpec, m: int) -> None:
    if not 0 <= m <= spec.depth:
        raise LatticeError(f"level {m} outside [0, {spec.depth}]")


def parent(spec: LatticeSpec, b: BallRef) -> BallRef:
    if b.level >= spec.depth:
        raise LatticeError("the root has no parent")
    _check_level(spec, b.level)
    return BallRef(b.level + 1, b.index // spec.branching)


def children(spec: LatticeSpec, b: BallRef) -> list[BallRef]:
    if b.level < 1:
        raise LatticeError("sites have no children")
    _check_level(spec, b.level)
    P = spec.branching
    return [BallRef(b.level - 1, b.index * P + k) for k in range(P)]


def ball_of_site(spec: LatticeSpec, i: int, m: int) -> BallRef:
    _check_site(spec, i)
    _check_level(spec, m)
    return BallRef(m, i // spec.branching**m)


def sites_in_ball(spec: LatticeSpec, b: BallRef) -> range:
    _check_level(spec, b.level)
    size = spec.branching**b.level
    if not 0 <= b.index < spec.n_sites // size:
        raise LatticeError(f"ball index {b.index} out of range at level {b.level}")
    return range(b.index * size, (b.index + 1) * size)


def shell_sizes(spec: LatticeSpec) -> list[Shell]:
    """Distance shells ``p**(l*r + m)`` for ``m = 1..depth`` with neighbor counts."""
    P, N = spec.branching, spec.n_sites
    return [
        Shell(m, spec.distance(m), P**m - P ** (m - 1), N * (P**m - P ** (m - 1)))
        for m in range(1, spec.depth + 1)
    ]
