"""Even local potentials in the Wick basis and the hierarchical RG map.

Single scale (``l = 1``) on the unit lattice::

    (T V)(phi) = -p**d * log E_zeta[ exp(-V(p**-phi_dim * phi + zeta)) ],  zeta ~ N(0, 1)

up to an additive constant.  The reference variance ``sigma2`` solves
``sigma2 = p**(-2 phi_dim) sigma2 + 1``, which makes the Wick monomials
``:phi^k:_sigma2`` eigenfunctions of the linear part with eigenvalues
``p**(d - k phi_dim)``.  General ``l`` composes ``l`` single steps.

Numerics
--------
The map is evaluated as ``T V = p**d E[V] + R`` with the cumulant remainder
``R = -p**d (log E_w[exp(-V)] + E_w[V])``.  The first term is applied exactly
in coefficient space.  ``E_w`` is the fluctuation average restricted to the
field window ``|x| <= window * sigma`` (renormalized), computed by
Gauss-Legendre quadrature of order ``inner_order``; truncated polynomials
with a negative top coefficient do not define convergent integrals without
such a window.  ``R`` is sampled at
the probabilists' Gauss-Hermite nodes of the ``N(0, sigma2)`` weight (clipped
to the same window) and projected onto ``{1, :phi^2:, ..., :phi^K:}`` by
weighted least squares; the constant is fixed by ``(T V)(0) = 0``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial import hermite_e as He
from numpy.polynomial import polynomial as Poly
from scipy.special import logsumexp

__all__ = [
    "RGError",
    "UnstablePotentialError",
    "Potential",
    "RGSpec",
    "FlowStatus",
    "FlowResult",
    "eval_potential",
    "wick_basis",
    "rg_step",
    "rg_step_single",
    "linearize",
    "wick_norms",
    "gaussian_eigenvalues",
    "flow",
    "default_bounds",
    "sup_gap",
]

# log of the largest Boltzmann weight accepted at a quadrature node
_EXP_LIMIT = 700.0


class RGError(ArithmeticError):
    pass


class UnstablePotentialError(RGError):
    """``exp(-V)`` leaves the representable range inside the field window."""


@dataclass(frozen=True)
class RGSpec:
    p: int = 2
    l: int = 1
    d: int = 3
    phi_dim: float = 0.725
    quad_order: int = 80
    phi_max: float = 6.0
    k_max: int = 8
    fit: str = "wls"
    window: float = 10.0
    inner_order: int = 400

    def __post_init__(self):
        if self.k_max < 2 or self.k_max % 2:
            raise RGError("k_max must be an even integer >= 2")
        if self.quad_order < 2 * self.k_max:
            raise RGError("quad_order must be >= 2 * k_max")
        if self.phi_max < 4:
            raise RGError("phi_max must be >= 4")
        if not 0 < self.phi_dim < self.d / 2:
            raise RGError("need 0 < phi_dim < d/2")
        if not 3 <= self.window:
            raise RGError("window must be >= 3 (units of sigma)")
        if self.inner_order < 2 * self.quad_order:
            raise RGError("inner_order must be >= 2 * quad_order")
        if self.fit != "wls":
            raise RGError(f"unknown fit strategy {self.fit!r}")

    @classmethod
    def bms(cls, eps: float, p: int = 2, l: int = 1, **kw) -> RGSpec:
        """``d = 3`` with ``phi_dim = (3 - eps) / 4``."""
        return cls(p=p, l=l, d=3, phi_dim=(3.0 - eps) / 4.0, **kw)

    def with_epsilon(self, eps: float) -> RGSpec:
        return replace(self, phi_dim=(self.d - eps) / 4.0)

    def replace(self, **kw) -> RGSpec:
        return replace(self, **kw)

    @property
    def epsilon(self) -> float:
        return self.d - 4.0 * self.phi_dim

    @cached_property
    def sigma2(self) -> float:
        return 1.0 / (1.0 - float(self.p) ** (-2.0 * self.phi_dim))

    @property
    def ks(self) -> tuple[int, ...]:
        return tuple(range(2, self.k_max + 1, 2))

    @property
    def n_coeffs(self) -> int:
        return self.k_max // 2

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> RGSpec:
        return cls(**obj)


@dataclass(frozen=True)
class Potential:
    """``V = const + sum_k v_k :phi^k:_sigma2`` over even ``k = 2..k_max``."""

    sigma2: float
    coeffs: tuple[float, ...]
    const: float = 0.0
    fit_residual: float | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise RGError("a potential needs at least the quadratic coefficient")
        if self.sigma2 <= 0:
            raise RGError("sigma2 must be positive")

    @classmethod
    def zero(cls, sigma2: float, k_max: int = 8) -> Potential:
        return cls(sigma2, (0.0,) * (k_max // 2))

    @classmethod
    def from_couplings(cls, sigma2: float, k_max: int = 8, **vk: float) -> Potential:
        """``Potential.from_couplings(s2, v2=-0.1, v4=0.05)``."""
        c = [0.0] * (k_max // 2)
        for name, value in vk.items():
            k = int(name.lstrip("v"))
            if k % 2 or not 2 <= k <= k_max:
                raise RGError(f"no coefficient {name} for k_max={k_max}")
            c[k // 2 - 1] = value
        return cls(sigma2, tuple(c))

    @property
    def k_max(self) -> int:
        return 2 * len(self.coeffs)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.coeffs)

    def coeff(self, k: int) -> float:
        if k % 2 or not 2 <= k <= self.k_max:
            return 0.0
        return self.coeffs[k // 2 - 1]

    @property
    def v2(self) -> float:
        return self.coeff(2)

    @property
    def v4(self) -> float:
        return self.coeff(4)

    def with_vector(self, v) -> Potential:
        return Potential(self.sigma2, tuple(v))

    def resized(self, k_max: int) -> Potential:
        c = list(self.coeffs[: k_max // 2]) + [0.0] * max(0, k_max // 2 - len(self.coeffs))
        return Potential(self.sigma2, tuple(c), self.const)

    def power_coefficients(self) -> np.ndarray:
        """Coefficients in the monomial basis ``1, phi, phi^2, ...``."""
        s = math.sqrt(self.sigma2)
        herm = np.zeros(self.k_max + 1)
        for i, v in enumerate(self.coeffs):
            k = 2 * i + 2
            herm[k] = v * s**k
        # He_k(phi/s) -> powers of phi/s, then rescale
        pc = He.herme2poly(herm)
        pc = pc * s ** (-np.arange(len(pc), dtype=float))
        pc[0] += self.const
        return pc

    def __call__(self, phi):
        return eval_potential(self, phi)

    def to_json(self) -> dict:
        out = {"sigma2": self.sigma2, "coeffs": {str(2 * i + 2): v for i, v in enumerate(self.coeffs)}}
        if self.const:
            out["const"] = self.const
        return out

    @classmethod
    def from_json(cls, obj: dict | str) -> Potential:
        if isinstance(obj, str):
            obj = json.loads(obj)
        raw = {int(k): float(v) for k, v in obj["coeffs"].items()}
        if any(k % 2 or k < 2 for k in raw):
            raise RGError("only even coefficients k >= 2 are allowed")
        k_max = max(raw) if raw else 2
        c = [raw.get(k, 0.0) for k in range(2, k_max + 1, 2)]
        return cls(float(obj["sigma2"]), tuple(c), float(obj.get("const", 0.0)))


def eval_potential(V: Potential, phi):
    """Exact polynomial evaluation through the monomial expansion."""
    return Poly.polyval(phi, V.power_coefficients())


def wick_basis(x, sigma2: float, ks) -> np.ndarray:
    """Columns ``:x^k:_sigma2 = sigma**k He_k(x / sigma)`` for each ``k``."""
    x = np.asarray(x, dtype=float)
    s = math.sqrt(sigma2)
    u = x / s
    cols = []
    for k in ks:
        e = np.zeros(k + 1)
        e[k] = 1.0
        cols.append(s**k * He.hermeval(u, e))
    return np.stack(cols, axis=-1)


class _StepKernel:
    """Precomputed quadrature for one single-scale RG step."""

    def __init__(self, spec: RGSpec):
        self.spec = spec
        p, d, a = float(spec.p), spec.d, spec.phi_dim
        s2 = spec.sigma2
        s = math.sqrt(s2)
        self.scale = p**-a
        self.volume = p**d
        self.eigen = np.array([p ** (d - k * a) for k in spec.ks])

        u, w = He.hermegauss(spec.quad_order)
        keep = np.abs(u) <= spec.phi_max
        self.nodes = s * u[keep]
        self.weights = w[keep] / math.sqrt(2.0 * math.pi)

        window = spec.window * s
        t, wt = np.polynomial.legendre.leggauss(spec.inner_order)
        self.inner = window * t
        log_k = -0.5 * (self.inner[None, :] - self.scale * self.nodes[:, None]) ** 2 + np.log(window * wt)[None, :]
        self.log_kernel = log_k - logsumexp(log_k, axis=1, keepdims=True)
        self.kernel = np.exp(self.log_kernel)

        self.basis_inner = wick_basis(self.inner, s2, spec.ks)
        design = np.column_stack([np.ones_like(self.nodes), wick_basis(self.nodes, s2, spec.ks)])
        sw = np.sqrt(self.weights)
        self.design = design
        self.sqrt_w = sw
        self.projector = np.linalg.pinv(design * sw[:, None]) * sw[None, :]
        self.wick_at_zero = wick_basis(0.0, s2, spec.ks)

    def remainder(self, v: np.ndarray) -> np.ndarray:
        vx = self.basis_inner @ v
        if np.max(-vx) > _EXP_LIMIT:
            raise UnstablePotentialError(
                f"exp(-V) exceeds exp({_EXP_LIMIT:g}) inside the field window (max -V = {np.max(-vx):.3g})"
            )
        ev = self.kernel @ vx
        m = self.kernel @ np.expm1(-vx)
        if np.all(m > -0.5):
            log_e = np.log1p(m)
        else:
            log_e = logsumexp(self.log_kernel - vx[None, :], axis=1)
        return -self.volume * (log_e + ev)

    def step(self, v: np.ndarray) -> np.ndarray:
        c = self.projector @ self.remainder(v)
        return self.eigen * v + c[1:]

    def step_with_residual(self, v: np.ndarray) -> tuple[np.ndarray, float]:
        r = self.remainder(v)
        c = self.projector @ r
        res = self.sqrt_w * (r - self.design @ c)
        tv = r + self.design[:, 1:] @ (self.eigen * v)
        scale = np.linalg.norm(self.sqrt_w * tv)
        rel = float(np.linalg.norm(res) / scale) if scale > 0 else 0.0
        return self.eigen * v + c[1:], rel


@lru_cache(maxsize=32)
def _kernel(spec: RGSpec) -> _StepKernel:
    return _StepKernel(spec)


def _check_potential(V: Potential, spec: RGSpec) -> None:
    if not math.isclose(V.sigma2, spec.sigma2, rel_tol=1e-12):
        raise RGError(f"potential sigma2 {V.sigma2} differs from the model's {spec.sigma2}")
    if V.k_max != spec.k_max:
        raise RGError(f"potential has k_max={V.k_max}, spec expects {spec.k_max}")


def _step_vector(v: np.ndarray, spec: RGSpec) -> np.ndarray:
    ker = _kernel(spec)
    for _ in range(spec.l):
        v = ker.step(v)
    return v


def rg_step_single(V: Potential, spec: RGSpec, fit_tol: float = 1e-2) -> Potential:
    """One ``p``-adic scale (``L = p``) of the RG map."""
    _check_potential(V, spec)
    if V.coeffs[-1] < 0:
        warnings.warn("leading coefficient is negative; the flow may be unstable", RuntimeWarning, stacklevel=2)
    ker = _kernel(spec)
    v, rel = ker.step_with_residual(V.vector)
    if rel > fit_tol:
        warnings.warn(f"RG projection residual {rel:.2e} exceeds {fit_tol:g}", RuntimeWarning, stacklevel=2)
    const = -float(ker.wick_at_zero @ v)
    return Potential(V.sigma2, tuple(v), const, fit_residual=rel)


def rg_step(V: Potential, spec: RGSpec, fit_tol: float = 1e-2) -> Potential:
    """Apply the RG map with ``L = p**l`` as ``l`` single-scale steps."""
    for _ in range(spec.l):
        V = rg_step_single(V, spec, fit_tol)
    return V


def wick_norms(spec: RGSpec) -> np.ndarray:
    """``||:phi^k:||`` in ``L2(N(0, sigma2))``, i.e. ``sqrt(k!) sigma**k``."""
    return np.array([math.sqrt(math.factorial(k)) * spec.sigma2 ** (k / 2) for k in spec.ks])


def linearize(V: Potential | np.ndarray, spec: RGSpec, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the RG map in coefficient space.

    The probe along ``v_k`` has size ``h / ||:phi^k:||``, so ``h`` is a step in
    the orthonormal Wick basis.  Differences at ``h`` and ``h/2`` are combined
    by one Richardson step: the ``O(h**2)`` term is sizable for ``k = 8``
    because ``:phi^8:`` is large at the window edge.
    """
    v0 = V.vector if isinstance(V, Potential) else np.asarray(V, dtype=float)
    n = len(v0)
    steps = h / wick_norms(spec)[:n]
    J = np.empty((n, n))
    for k in range(n):
        cols = []
        for hk in (steps[k], steps[k] / 2):
            e = np.zeros(n)
            e[k] = hk
            cols.append((_step_vector(v0 + e, spec) - _step_vector(v0 - e, spec)) / (2.0 * hk))
        J[:, k] = (4.0 * cols[1] - cols[0]) / 3.0
    return J


def gaussian_eigenvalues(spec: RGSpec) -> np.ndarray:
    """``p**(l (d - k phi_dim))`` for ``k = 2, 4, ..., k_max``."""
    p = float(spec.p)
    return np.array([p ** (spec.l * (spec.d - k * spec.phi_dim)) for k in spec.ks])


class FlowStatus(str, Enum):
    CONVERGED = "CONVERGED"
    ESCAPED_MASSIVE = "ESCAPED_MASSIVE"
    ESCAPED_UNSTABLE = "ESCAPED_UNSTABLE"
    MAXITER = "MAXITER"


@dataclass
class FlowResult:
    trajectory: np.ndarray
    status: FlowStatus
    message: str = ""

    @property
    def steps(self) -> int:
        return len(self.trajectory) - 1

    def potentials(self, sigma2: float) -> list[Potential]:
        return [Potential(sigma2, tuple(v)) for v in self.trajectory]


def sup_gap(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def default_bounds(spec: RGSpec) -> tuple[float, float]:
    """Escape thresholds on ``v2`` implied by the exact quadratic recursion.

    For ``V = v2 :phi^2:`` the map is ``v2 -> lam2 v2 / (1 + 2 v2)``: above
    criticality ``v2`` saturates at the massive fixed point ``(lam2 - 1)/2``,
    and for ``v2 <= -1/2`` the quadratic weight is not normalizable.  The
    upper bound is half-way to the massive attractor.
    """
    lam2 = float(spec.p) ** (spec.d - 2.0 * spec.phi_dim)
    return (-0.5, (lam2 - 1.0) / 4.0)


def flow(
    V0: Potential | np.ndarray,
    spec: RGSpec,
    n_steps: int,
    bounds: tuple[float, float] | None = None,
    tol: float = 1e-12,
) -> FlowResult:
    """Iterate the RG map and classify how the trajectory ends."""
    if n_steps < 1:
        raise RGError("n_steps must be >= 1")
    v = V0.vector if isinstance(V0, Potential) else np.asarray(V0, dtype=float)
    if isinstance(V0, Potential):
        _check_potential(V0, spec)
    traj = [v]
    lo, hi = default_bounds(spec) if bounds is None else bounds
    for _ in range(n_steps):
        try:
            w = _step_vector(v, spec)
        except UnstablePotentialError as exc:
            return FlowResult(np.array(traj), FlowStatus.ESCAPED_UNSTABLE, str(exc))
        traj.append(w)
        if not np.all(np.isfinite(w)):
            return FlowResult(np.array(traj), FlowStatus.ESCAPED_UNSTABLE, "non-finite coefficients")
        if w[0] > hi:
            return FlowResult(np.array(traj), FlowStatus.ESCAPED_MASSIVE)
        if w[0] < lo:
            return FlowResult(np.array(traj), FlowStatus.ESCAPED_UNSTABLE, "mass below bound")
        if sup_gap(w, v) < tol:
            return FlowResult(np.array(traj), FlowStatus.CONVERGED)
        v = w
    return FlowResult(np.array(traj), FlowStatus.MAXITER)
