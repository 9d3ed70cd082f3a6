"""Two-point observables in direct and Fourier space and L1 masses."""

from __future__ import annotations

import math
import warnings
from fractions import Fraction
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from ..lattice import LatticeSpec, distance_levels, site_to_point
from ..padic import PadicPoint, dot, point_norm, polar_part
from .covariance import CovarianceModel
from .sampling import FieldConfig

__all__ = [
    "Correlator",
    "shell_products",
    "empirical_two_point",
    "exact_two_point",
    "slope_fit",
    "fourier_two_point",
    "fourier_exact",
    "l1_mass",
]


@dataclass(frozen=True)
class Correlator:
    """Shell-averaged two-point estimates; level 0 is the coincident shell."""

    levels: np.ndarray
    distances: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    n: int

    def rows(self):
        for dist, est, se in zip(self.distances, self.estimate, self.stderr):
            yield float(dist), float(est), float(se), self.n


def shell_products(spec: LatticeSpec, phi: np.ndarray) -> np.ndarray:
    """Per-sample shell averages of ``phi(x)phi(y)``, shape ``(n_samples, depth + 1)``.

    Uses ball sums: pairs sharing a level-``m`` ball contribute
    ``sum_B (sum_{x in B} phi)^2``; consecutive differences isolate each shell.
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    n, N = phi.shape
    P = spec.branching
    q = [np.einsum("ij,ij->i", phi, phi)]
    for m in range(1, spec.depth + 1):
        sums = phi.reshape(n, N // P**m, P**m).sum(axis=2)
        q.append(np.einsum("ij,ij->i", sums, sums))
    out = np.empty((n, spec.depth + 1))
    out[:, 0] = q[0] / N
    for m in range(1, spec.depth + 1):
        out[:, m] = (q[m] - q[m - 1]) / (N * (P**m - P ** (m - 1)))
    return out


def _jackknife_mean(x: np.ndarray, batch_size: int) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[0]
    nb = n // batch_size
    mean = x.mean(axis=0)
    if nb < 2:
        return mean, np.full(x.shape[1:], np.nan)
    xb = x[: nb * batch_size].reshape(nb, batch_size, *x.shape[1:]).mean(axis=1)
    total = xb.sum(axis=0)
    loo = (total - xb) / (nb - 1)
    se = np.sqrt((nb - 1) / nb * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    return mean, se


def empirical_two_point(
    samples: np.ndarray | Sequence[FieldConfig], spec: LatticeSpec | None = None, batch_size: int = 100
) -> Correlator:
    """Shell estimates of ``S_2`` with jackknife errors over consecutive batches."""
    if spec is None:
        first = samples[0]
        spec = first.spec
    if not isinstance(samples, np.ndarray):
        samples = np.stack([c.values for c in samples])
    prods = shell_products(spec, samples)
    mean, se = _jackknife_mean(prods, batch_size)
    levels = np.arange(spec.depth + 1)
    dist = np.array([0.0] + [spec.distance(m) for m in levels[1:]])
    return Correlator(levels, dist, mean, se, prods.shape[0])


def exact_two_point(model: CovarianceModel, include_zero_mode: bool = True) -> Correlator:
    sp = model.spec
    levels = np.arange(sp.depth + 1)
    est = np.array([model.level_covariance(int(m), include_zero_mode) for m in levels])
    dist = np.array([0.0] + [sp.distance(m) for m in levels[1:]])
    return Correlator(levels, dist, est, np.zeros_like(est), 0)


def _wls_slope(x: np.ndarray, y: np.ndarray, sy: np.ndarray | None) -> tuple[float, float]:
    A = np.column_stack([np.ones_like(x), x])
    if sy is None or not np.all(np.isfinite(sy)) or np.all(sy == 0):
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        dof = len(x) - 2
        if dof <= 0:
            return float(coef[1]), 0.0
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(A.T @ A)
        return float(coef[1]), float(math.sqrt(max(cov[1, 1], 0.0)))
    w = 1.0 / np.maximum(sy, 1e-300) ** 2
    W = A.T @ (A * w[:, None])
    coef = np.linalg.solve(W, A.T @ (w * y))
    return float(coef[1]), float(math.sqrt(np.linalg.inv(W)[1, 1]))


def slope_fit(corr: Correlator, min_distance: float | None = None) -> tuple[float, float]:
    """Least-squares slope of ``log S_2`` against ``log distance``.

    Only shells at positive distance enter (above ``min_distance`` if given).
    Errors on the logarithm are propagated as ``stderr / estimate``.
    """
    keep = corr.distances > (0.0 if min_distance is None else min_distance)
    bad = keep & (corr.estimate <= 0)
    if bad.any():
        warnings.warn(f"excluding {int(bad.sum())} nonpositive shell estimates from the fit", stacklevel=2)
    keep &= corr.estimate > 0
    if keep.sum() < 2:
        raise ValueError("need at least two shells with positive estimates")
    x = np.log(corr.distances[keep])
    y = np.log(corr.estimate[keep])
    sy = corr.stderr[keep] / corr.estimate[keep]
    if np.all(corr.stderr[keep] == 0):
        sy = None
    return _wls_slope(x, y, sy)


@lru_cache(maxsize=8)
def _site_points(spec: LatticeSpec) -> tuple[PadicPoint, ...]:
    return tuple(site_to_point(spec, i) for i in range(spec.n_sites))


@lru_cache(maxsize=8)
def _site_levels(spec: LatticeSpec) -> np.ndarray:
    return distance_levels(spec, np.arange(spec.n_sites), 0)


def fourier_two_point(model: CovarianceModel, k: PadicPoint, include_zero_mode: bool = True) -> float:
    """``cell_volume * sum_x C_r(x) cos(2 pi {x.k}_p)`` by direct character sums.

    Sites are grouped by their exact character angle and distance level, so
    the sine part cancels exactly between ``t`` and ``1 - t``.
    """
    sp = model.spec
    if k.d != sp.d or k.prime != sp.p:
        raise ValueError("frequency does not match the lattice")
    if point_norm(k) > Fraction(sp.p) ** (-sp.l * sp.r):
        raise ValueError("frequency is not resolvable by the lattice mesh")
    levels = _site_levels(sp)
    counts: dict = defaultdict(lambda: defaultdict(int))
    for x, m in zip(_site_points(sp), levels):
        t = polar_part(dot(x, k))
        counts[(t.numerator, t.denominator)][int(m)] += 1
    cov = [model.level_covariance(m, include_zero_mode) for m in range(sp.depth + 1)]
    re = im = 0.0
    for (num, den), by_level in sorted(counts.items()):
        w = math.fsum(cnt * cov[m] for m, cnt in sorted(by_level.items()))
        ang = 2.0 * math.pi * num / den
        re += w * math.cos(ang)
        if num and 2 * num < den:
            mirror = (den - num, den)
            w_m = math.fsum(cnt * cov[m] for m, cnt in sorted(counts.get(mirror, {}).items()))
            im -= (w - w_m) * math.sin(ang)
    if abs(im) >= 1e-12:
        raise ArithmeticError(f"imaginary part {im} does not vanish")
    return sp.cell_volume * re


def fourier_exact(model: CovarianceModel, k_exponent: int, include_zero_mode: bool = True) -> float:
    """Radial closed form at ``|k| = p**(-k_exponent)``; an oracle for the direct sum.

    Uses that the transform of the indicator of ``{|x| <= p**j}`` is
    ``p**(d*j) * 1(|k| <= p**-j)`` for balls inside the box.
    """
    sp = model.spec
    p, d, a = float(sp.p), sp.d, model.phi_dim
    total = 0.0
    for j in range(sp.l * sp.r, sp.l * sp.s):
        if j <= k_exponent:
            total += p ** (-2 * j * a) * p ** (d * j)
    if include_zero_mode and k_exponent >= sp.l * sp.s:
        total += model.zero_mode_variance * p ** (d * sp.l * sp.s)
    return total


def l1_mass(
    model: CovarianceModel, s_grid: Iterable[int], decay: Callable[[float], float] | None = None
) -> list[tuple[int, float]]:
    """Partial masses ``cell_volume * sum_{|x| <= L**s} |C_r(x)|`` over growing boxes.

    ``decay`` multiplies the kernel by a function of distance (test hook).
    """
    out, last = [], None
    for s in s_grid:
        if last is not None and s <= last:
            raise ValueError("s_grid must be increasing")
        last = s
        sp = model.spec.replace(s=s)
        m_model = model.with_spec(sp)
        P = sp.branching
        terms = [abs(m_model.level_covariance(0))]
        for m in range(1, sp.depth + 1):
            c = abs(m_model.level_covariance(m))
            if decay is not None:
                c *= decay(sp.distance(m))
            terms.append((P**m - P ** (m - 1)) * c)
        out.append((s, sp.cell_volume * math.fsum(terms)))
    return out
