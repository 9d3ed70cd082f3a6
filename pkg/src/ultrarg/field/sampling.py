"""Exact sampler for the cutoff Gaussian field and the interacting action.

Using ``1(|x - y| <= p**j) = sum_B 1_B(x) 1_B(y)`` over balls of radius
``p**j``, the field is synthesized as

    phi(x) = sum_{m < depth} p**(-(l*r + m)*phi_dim) * zeta_{B_m(x)} + tau * zeta_glob

with i.i.d. standard normal ``zeta``.  Coordinates are ordered level 0 first
(one per site), then level 1, ..., then the zero mode.  Sample ``n`` draws its
coordinates from the stream ``SeedSequence(seed, spawn_key=(n,))`` so that
coordinate ``k`` of sample ``n`` depends only on ``(seed, n, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lattice import LatticeSpec
from .covariance import CovarianceModel, wick_constants

__all__ = [
    "MAX_SAMPLE_SITES",
    "FieldConfig",
    "MultiscaleCoords",
    "coordinate_count",
    "level_sizes",
    "draw_coords",
    "synthesize",
    "synthesize_batch",
    "sample_gaussian",
    "sample_gaussian_batch",
    "action",
]

MAX_SAMPLE_SITES = 2**22


@dataclass(frozen=True, eq=False)
class FieldConfig:
    spec: LatticeSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.spec.n_sites,):
            raise ValueError(f"expected {self.spec.n_sites} site values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class MultiscaleCoords:
    """Per-level ball variables plus the global zero-mode variable."""

    spec: LatticeSpec
    levels: tuple[np.ndarray, ...]
    zero_mode: float
    seed: int | None = None
    index: int | None = None

    @classmethod
    def from_flat(cls, spec: LatticeSpec, flat: np.ndarray, **provenance) -> MultiscaleCoords:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (coordinate_count(spec),):
            raise ValueError("wrong number of multiscale coordinates")
        levels, pos = [], 0
        for n in level_sizes(spec):
            levels.append(flat[pos : pos + n])
            pos += n
        return cls(spec, tuple(levels), float(flat[pos]), **provenance)

    def flat(self) -> np.ndarray:
        return np.concatenate([*self.levels, [self.zero_mode]])


def level_sizes(spec: LatticeSpec) -> list[int]:
    """Number of balls at levels ``0..depth-1``."""
    P = spec.branching
    return [P ** (spec.depth - m) for m in range(spec.depth)]


def coordinate_count(spec: LatticeSpec) -> int:
    return sum(level_sizes(spec)) + 1


def _guard(spec: LatticeSpec) -> None:
    if spec.n_sites > MAX_SAMPLE_SITES:
        raise ValueError(f"{spec.n_sites} sites exceed the sampling guard {MAX_SAMPLE_SITES}")


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed) % 2**64, spawn_key=(int(index),)))


def draw_coords(spec: LatticeSpec, seed: int, index: int = 0) -> MultiscaleCoords:
    _guard(spec)
    flat = _rng(seed, index).standard_normal(coordinate_count(spec))
    return MultiscaleCoords.from_flat(spec, flat, seed=seed, index=index)


def synthesize(model: CovarianceModel, coords: MultiscaleCoords, include_zero_mode: bool = True) -> FieldConfig:
    sp = model.spec
    phi = np.zeros(sp.n_sites)
    P = sp.branching
    for m, zeta in enumerate(coords.levels):
        phi += model.scale_amplitude(m) * np.repeat(zeta, P**m)
    if include_zero_mode:
        phi += np.sqrt(model.zero_mode_variance) * coords.zero_mode
    return FieldConfig(sp, phi)


def synthesize_batch(model: CovarianceModel, flat: np.ndarray, include_zero_mode: bool = True) -> np.ndarray:
    """Vectorized synthesis for coordinates of shape ``(n_samples, n_coords)``."""
    sp = model.spec
    flat = np.atleast_2d(flat)
    n = flat.shape[0]
    phi = np.zeros((n, sp.n_sites))
    P, pos = sp.branching, 0
    for m, size in enumerate(level_sizes(sp)):
        block = flat[:, pos : pos + size]
        phi += model.scale_amplitude(m) * np.repeat(block, P**m, axis=1)
        pos += size
    if include_zero_mode:
        phi += np.sqrt(model.zero_mode_variance) * flat[:, pos : pos + 1]
    return phi


def sample_gaussian(
    spec: LatticeSpec, model: CovarianceModel, seed: int, include_zero_mode: bool = True, index: int = 0
) -> FieldConfig:
    if model.spec != spec:
        raise ValueError("model and lattice spec disagree")
    return synthesize(model, draw_coords(spec, seed, index), include_zero_mode)


def sample_gaussian_batch(
    model: CovarianceModel, seed: int, n_samples: int, include_zero_mode: bool = True, start: int = 0
) -> np.ndarray:
    """Samples ``start .. start + n_samples - 1`` as rows of an array."""
    sp = model.spec
    _guard(sp)
    k = coordinate_count(sp)
    flat = np.empty((n_samples, k))
    for row, n in enumerate(range(start, start + n_samples)):
        flat[row] = _rng(seed, n).standard_normal(k)
    return synthesize_batch(model, flat, include_zero_mode)


def action(config: FieldConfig, g: float, mu: float, model: CovarianceModel) -> float:
    """``cell_volume * sum_x [g :phi^4:_c + mu :phi^2:_c]`` with ``c = C_r(0)``."""
    if g < 0:
        raise ValueError("quartic coupling must be >= 0")
    c = wick_constants(model)
    phi = config.values
    p2 = phi * phi
    dens = g * (p2 * p2 - 6.0 * c * p2 + 3.0 * c * c) + mu * (p2 - c)
    return float(config.spec.cell_volume * dens.sum())
