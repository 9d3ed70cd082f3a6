"""Cutoff covariance of the ultrametric Gaussian field.

With unit normalization the full-space kernel is

    C_r(x) = sum_{j >= max(l*r, log_p|x|)} p**(-2*j*phi_dim)
           = sigma2 * p**(-2*phi_dim * max(l*r, log_p|x|)),

with ``sigma2 = 1 / (1 - p**(-2*phi_dim))``.  Inside the box it splits into
one term per ball scale ``j = l*r + m`` (``m < depth``) plus the zero mode,
the constant ``tau2 = sigma2 * p**(-2*l*s*phi_dim)`` collecting ``j >= l*s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..lattice import LatticeSpec

__all__ = ["CovarianceError", "CovarianceModel", "cov_value", "wick_constants", "wick_eval"]


class CovarianceError(ValueError):
    pass


@dataclass(frozen=True)
class CovarianceModel:
    spec: LatticeSpec
    phi_dim: float

    def __post_init__(self):
        if not 0.0 < self.phi_dim < self.spec.d / 2:
            raise CovarianceError(f"need 0 < [phi] < d/2 = {self.spec.d / 2}, got {self.phi_dim}")

    @cached_property
    def sigma2(self) -> float:
        return 1.0 / (1.0 - float(self.spec.p) ** (-2.0 * self.phi_dim))

    @cached_property
    def zero_mode_variance(self) -> float:
        return self.sigma2 * float(self.spec.p) ** (-2.0 * self.phi_dim * self.spec.l * self.spec.s)

    def scale_amplitude(self, m: int) -> float:
        """Coefficient ``p**(-(l*r + m)*phi_dim)`` of the level-``m`` ball variables."""
        return float(self.spec.p) ** (-(self.spec.l * self.spec.r + m) * self.phi_dim)

    def level_covariance(self, m: int, include_zero_mode: bool = True) -> float:
        """Covariance of two sites whose smallest common ball has level ``m`` (0: same site)."""
        sp = self.spec
        e = sp.l * sp.r + m
        c = self.sigma2 * float(sp.p) ** (-2.0 * self.phi_dim * e)
        return c if include_zero_mode else c - self.zero_mode_variance

    def with_spec(self, spec: LatticeSpec) -> CovarianceModel:
        return CovarianceModel(spec, self.phi_dim)


def _distance_exponent(model: CovarianceModel, distance: float) -> int:
    p = model.spec.p
    e = math.log(distance) / math.log(p)
    k = round(e)
    if abs(e - k) > 1e-9 or not math.isclose(float(p) ** k, distance, rel_tol=1e-12):
        raise CovarianceError(f"distance {distance} is not a power of {p}")
    return k


def cov_value(model: CovarianceModel, distance: float, include_zero_mode: bool = True) -> float:
    """``C_r`` at a p-power distance (or 0)."""
    sp = model.spec
    e = sp.l * sp.r if distance == 0 else _distance_exponent(model, distance)
    if not include_zero_mode and e > sp.l * sp.s:
        raise CovarianceError("distance exceeds the box diameter")
    return model.level_covariance(max(e, sp.l * sp.r) - sp.l * sp.r, include_zero_mode)


def wick_constants(model: CovarianceModel) -> float:
    """Wick-ordering constant ``c = C_r(0)``."""
    return model.level_covariance(0)


def wick_eval(phi, k: int, c: float):
    """``:phi^k:_c`` for ``k`` in {2, 4}."""
    phi = np.asarray(phi, dtype=float) if not np.isscalar(phi) else float(phi)
    if k == 2:
        return phi * phi - c
    if k == 4:
        p2 = phi * phi
        return p2 * p2 - 6.0 * c * p2 + 3.0 * c * c
    raise CovarianceError(f"unsupported Wick power {k}")
