"""Fixed points, spectra, the critical surface and cutoff-removal checks.

All objects live in the coefficient space ``(v2, v4, ..., v_kmax)`` of
:mod:`ultrarg.rg`.  The critical surface is parametrized by bisection on
``v2``: above it flows run off to the massive phase, below it to the unstable
(broken) side.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .rg import (
    FlowStatus,
    Potential,
    RGError,
    RGSpec,
    _step_vector,
    default_bounds,
    flow,
    linearize,
    sup_gap,
)

__all__ = [
    "CriticalError",
    "NontrivialityFailure",
    "FixedPointResult",
    "CriticalMuSearch",
    "ManifoldTrace",
    "TCCEntry",
    "TCCReport",
    "find_fixed_point",
    "gaussian_fixed_point",
    "spectrum",
    "relevant_directions",
    "critical_mu",
    "critical_mu_search",
    "slave_mass",
    "unstable_manifold",
    "tcc_check",
]


class CriticalError(RGError):
    pass


class NontrivialityFailure(CriticalError):
    """Newton landed on the Gaussian (or massive) fixed point."""


@dataclass
class FixedPointResult:
    spec: RGSpec
    potential: Potential
    residual: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    epsilon: float
    iterations: int = 0
    damping: list[float] = field(default_factory=list)
    ladder: list[float] = field(default_factory=list)

    @property
    def vector(self) -> np.ndarray:
        return self.potential.vector

    @property
    def n_relevant(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) > 1.0))

    def to_json(self) -> dict:
        ev = self.eigenvalues
        return {
            "spec": self.spec.to_json(),
            "epsilon": self.epsilon,
            "potential": self.potential.to_json(),
            "residual": self.residual,
            "eigenvalues": _complex_list(ev),
            "eigenvectors": [_complex_list(c) for c in self.eigenvectors.T],
            "n_relevant": self.n_relevant,
            "iterations": self.iterations,
            "damping": self.damping,
            "continuation": self.ladder,
        }


def _complex_list(a) -> list:
    a = np.asarray(a)
    if np.all(np.abs(a.imag) < 1e-14 * np.maximum(1.0, np.abs(a.real))):
        return [float(x) for x in a.real]
    return [[float(x.real), float(x.imag)] for x in a]


def spectrum(v: np.ndarray, spec: RGSpec, h: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of ``linearize`` sorted by descending modulus, unit columns."""
    w, U = np.linalg.eig(linearize(v, spec, h))
    order = np.argsort(-np.abs(w), kind="stable")
    w, U = w[order], U[:, order]
    if np.all(np.abs(w.imag) == 0):
        w, U = w.real, U.real
    U = U / np.linalg.norm(U, axis=0)
    # fix signs so the dominant entry is positive
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])].real)
    signs[signs == 0] = 1.0
    return w, U * signs


def _residual(v: np.ndarray, spec: RGSpec) -> np.ndarray:
    return _step_vector(v, spec) - v


def _newton(v: np.ndarray, spec: RGSpec, max_iter: int = 100, tol: float = 1e-15):
    v = np.array(v, dtype=float)
    F = _residual(v, spec)
    r = np.max(np.abs(F))
    damping: list[float] = []
    n = len(v)
    for it in range(1, max_iter + 1):
        if r < tol:
            return v, r, it - 1, damping
        J = linearize(v, spec) - np.eye(n)
        try:
            dv = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise CriticalError(f"singular Jacobian at iteration {it}") from exc
        t = 1.0
        for _ in range(21):
            w = v + t * dv
            try:
                Fw = _residual(w, spec)
                rw = np.max(np.abs(Fw))
            except RGError:
                rw = math.inf
            if rw < r:
                break
            t /= 2
        else:
            # no decrease: at the rounding floor this is convergence
            if r < 1e-12:
                return v, r, it, damping
            raise CriticalError(f"damped Newton stalled at iteration {it} with residual {r:.3e}")
        damping.append(t)
        v, F, r = w, Fw, rw
    if r < 1e-10:
        return v, r, max_iter, damping
    raise CriticalError(f"Newton did not converge in {max_iter} iterations (residual {r:.3e})")


def _is_nontrivial(v: np.ndarray) -> bool:
    return np.linalg.norm(v) >= 1e-8 and v[1] > 0


def find_fixed_point(
    spec: RGSpec,
    eps: float | None = None,
    init: Potential | np.ndarray | None = None,
    delta: float = 1e-3,
    max_iter: int = 100,
) -> FixedPointResult:
    """Nontrivial fixed point ``V*`` by damped Newton.

    Without ``init`` the solve is continued along ``eps/4, eps/2, eps`` from
    ``(v2, v4) = (0, delta)``; each rung starts from the previous solution
    scaled linearly in ``eps``.
    """
    if eps is None:
        eps = spec.epsilon
    if not 0 < eps <= 0.5 + 1e-12:
        raise CriticalError(f"epsilon must lie in (0, 0.5], got {eps}")
    target = spec.with_epsilon(eps)
    n = target.n_coeffs
    damping: list[float] = []
    iters = 0
    if init is not None:
        v0 = init.vector if isinstance(init, Potential) else np.asarray(init, dtype=float)
        v, res, it, dmp = _newton(v0, target, max_iter)
        iters, damping, ladder = it, dmp, [eps]
    else:
        ladder = [eps / 4, eps / 2, eps]
        v = None
        for i, e in enumerate(ladder):
            sp = spec.with_epsilon(e)
            if v is None:
                guesses = [np.r_[0.0, d, np.zeros(n - 2)] for d in (delta, 3 * delta, delta / 3)]
            else:
                guesses = [v * (e / ladder[i - 1])]
            for g in guesses:
                try:
                    w, res, it, dmp = _newton(g, sp, max_iter)
                except CriticalError:
                    continue
                if _is_nontrivial(w):
                    break
            else:
                raise NontrivialityFailure(f"no nontrivial fixed point found at eps={e:g}")
            v = w
            iters += it
            damping += dmp
    if not _is_nontrivial(v):
        raise NontrivialityFailure(f"collapsed to a trivial fixed point (|V*| = {np.linalg.norm(v):.2e})")
    res = float(np.max(np.abs(_residual(v, target))))
    w, U = spectrum(v, target)
    return FixedPointResult(target, Potential(target.sigma2, tuple(v)), res, w, U, eps, iters, damping, ladder)


def gaussian_fixed_point(spec: RGSpec) -> FixedPointResult:
    v = np.zeros(spec.n_coeffs)
    w, U = spectrum(v, spec)
    return FixedPointResult(spec, Potential(spec.sigma2, tuple(v)), 0.0, w, U, spec.epsilon)


def relevant_directions(fp: FixedPointResult) -> list[tuple[complex | float, np.ndarray]]:
    """Eigenpairs with ``|lambda| > 1``, largest first."""
    return [(fp.eigenvalues[i], fp.eigenvectors[:, i]) for i in range(len(fp.eigenvalues)) if abs(fp.eigenvalues[i]) > 1.0]


# --- critical surface ---------------------------------------------------------


@dataclass
class CriticalMuSearch:
    mu: float
    g: float
    bracket: tuple[float, float]
    transcript: list[tuple[float, float, str]]
    n_steps: int
    status: str = "CONVERGED"

    def to_json(self) -> dict:
        return {
            "mu_c": self.mu,
            "g": self.g,
            "bracket": list(self.bracket),
            "n_steps": self.n_steps,
            "status": self.status,
            "transcript": [{"lo": a, "hi": b, "mid_class": c} for a, b, c in self.transcript],
        }


def _classify(v, spec, n_steps, bounds) -> FlowStatus:
    return flow(v, spec, n_steps, bounds).status


def slave_mass(
    v: np.ndarray,
    spec: RGSpec,
    bracket: tuple[float, float],
    tol: float = 1e-12,
    n_steps: int = 60,
    bounds: tuple[float, float] | None = None,
    max_steps: int = 480,
) -> CriticalMuSearch:
    """Bisect ``v2`` so that ``(v2, v[1:])`` lies on the critical surface."""
    v = np.array(v, dtype=float)
    lo, hi = bracket
    if not lo < hi:
        raise CriticalError("bracket must satisfy lo < hi")

    def cls(mu, steps):
        w = v.copy()
        w[0] = mu
        return _classify(w, spec, steps, bounds)

    while True:
        c_lo, c_hi = cls(lo, n_steps), cls(hi, n_steps)
        if FlowStatus.MAXITER in (c_lo, c_hi) and n_steps < max_steps:
            n_steps *= 2
            continue
        break
    if c_lo != FlowStatus.ESCAPED_UNSTABLE or c_hi != FlowStatus.ESCAPED_MASSIVE:
        raise CriticalError(f"bracket [{lo}, {hi}] classifies as ({c_lo.value}, {c_hi.value}); need (ESCAPED_UNSTABLE, ESCAPED_MASSIVE)")
    transcript = []
    status = "CONVERGED"
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        c = cls(mid, n_steps)
        if c == FlowStatus.MAXITER and n_steps < max_steps:
            n_steps *= 2
            c = cls(mid, n_steps)
        transcript.append((lo, hi, c.value))
        if c == FlowStatus.ESCAPED_MASSIVE:
            hi = mid
        elif c == FlowStatus.ESCAPED_UNSTABLE:
            lo = mid
        else:
            # a flow that settles is on the surface to working precision
            return CriticalMuSearch(mid, float(v[1]), bracket, transcript, n_steps, c.value)
    return CriticalMuSearch(0.5 * (lo + hi), float(v[1]), bracket, transcript, n_steps, status)


def critical_mu_search(
    spec: RGSpec,
    g: float,
    bracket: tuple[float, float] = (-1.0, 1.0),
    tol: float = 1e-12,
    n_steps: int = 60,
    bounds: tuple[float, float] | None = None,
) -> CriticalMuSearch:
    if not g > 0:
        raise CriticalError("critical_mu needs g > 0")
    v = np.zeros(spec.n_coeffs)
    v[1] = g
    return slave_mass(v, spec, bracket, tol, n_steps, bounds)


def critical_mu(
    spec: RGSpec,
    g: float,
    bracket: tuple[float, float] = (-1.0, 1.0),
    tol: float = 1e-12,
    n_steps: int = 60,
    bounds: tuple[float, float] | None = None,
) -> float:
    """Bare mass ``mu_c(g)`` on the critical surface for ``V = mu :phi^2: + g :phi^4:``."""
    return critical_mu_search(spec, g, bracket, tol, n_steps, bounds).mu


def _local_bracket(v, spec, width, tol, n_steps, bounds):
    """Expand a small bracket around ``v[0]`` until the classes differ."""
    lo, hi = v[0] - width, v[0] + width
    for _ in range(60):
        w_lo, w_hi = v.copy(), v.copy()
        w_lo[0], w_hi[0] = lo, hi
        c_lo = _classify(w_lo, spec, n_steps, bounds)
        c_hi = _classify(w_hi, spec, n_steps, bounds)
        if c_lo == FlowStatus.ESCAPED_UNSTABLE and c_hi == FlowStatus.ESCAPED_MASSIVE:
            return lo, hi
        if c_lo != FlowStatus.ESCAPED_UNSTABLE:
            lo -= 2 * (hi - lo)
        if c_hi != FlowStatus.ESCAPED_MASSIVE:
            hi += 2 * (hi - lo)
    raise CriticalError("could not bracket the critical surface")


# --- manifolds ----------------------------------------------------------------


@dataclass
class ManifoldTrace:
    spec: RGSpec
    start: str
    branch: int
    delta: float
    trajectory: np.ndarray
    status: str
    message: str = ""
    target: np.ndarray | None = None

    @property
    def terminal(self) -> np.ndarray:
        return self.trajectory[-1]

    @property
    def terminal_distance(self) -> float | None:
        return None if self.target is None else sup_gap(self.terminal, self.target)

    def rows(self) -> list[list[float]]:
        return [[i, *map(float, v)] for i, v in enumerate(self.trajectory)]

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "start": self.start,
            "branch": self.branch,
            "delta": self.delta,
            "steps": len(self.trajectory) - 1,
            "status": self.status,
            "message": self.message,
            "terminal": [float(x) for x in self.terminal],
            "terminal_distance": self.terminal_distance,
        }


def unstable_manifold(
    spec: RGSpec,
    at: str | FixedPointResult = "gaussian",
    delta: float = 1e-4,
    n_steps: int = 200,
    branch: int = 1,
    target: np.ndarray | None = None,
    tol: float = 1e-13,
    stop_gap: float = 0.0,
) -> ManifoldTrace:
    """Trace an unstable branch by iterating the RG map.

    From the Gaussian fixed point the seed is ``(mu_c(delta), delta)`` and
    the mass is re-slaved to the critical surface after every step, so the
    trace follows the quartic direction rather than the mass direction.
    From a fixed point result the seed is ``V* + branch * delta * e_1``.
    """
    if branch not in (1, -1):
        raise CriticalError("branch must be +1 or -1")
    n = spec.n_coeffs
    if isinstance(at, FixedPointResult):
        v = at.vector.copy()
        rel = relevant_directions(at)
        if rel and delta:
            v = v + branch * delta * np.real(rel[0][1])
        traj = [v]
        lo, hi = default_bounds(spec)
        for i in range(n_steps):
            try:
                v = _step_vector(v, spec)
            except RGError as exc:
                return ManifoldTrace(spec, "fixed_point", branch, delta, np.array(traj), "ESCAPED_UNSTABLE", f"step {i + 1}: {exc}", target)
            traj.append(v)
            if v[0] > hi:
                return ManifoldTrace(spec, "fixed_point", branch, delta, np.array(traj), "ESCAPED_MASSIVE", f"step {i + 1}", target)
            if v[0] < lo:
                return ManifoldTrace(spec, "fixed_point", branch, delta, np.array(traj), "ESCAPED_UNSTABLE", f"step {i + 1}", target)
        return ManifoldTrace(spec, "fixed_point", branch, delta, np.array(traj), "COMPLETED", "", target)
    if at != "gaussian":
        raise CriticalError(f"unknown starting point {at!r}")
    if branch < 0:
        raise CriticalError("the Gaussian branch with negative quartic coupling leaves the stable region")
    v = np.zeros(n)
    v[1] = delta
    v[0] = critical_mu(spec, delta, tol=tol)
    traj = [v]
    width = 1e-9
    for i in range(n_steps):
        try:
            w = _step_vector(v, spec)
            lo, hi = _local_bracket(w, spec, width, tol, 60, None)
            w[0] = slave_mass(w, spec, (lo, hi), tol).mu
        except RGError as exc:
            return ManifoldTrace(spec, "gaussian", branch, delta, np.array(traj), "DIVERGED", f"step {i + 1}: {exc}", target)
        width = max(1e-9, 4 * abs(w[0] - _step_vector(v, spec)[0]))
        gap = sup_gap(w, v)
        v = w
        traj.append(v)
        if gap < stop_gap:
            break
    return ManifoldTrace(spec, "gaussian", branch, delta, np.array(traj), "COMPLETED", "", target)


# --- transverse convergence ---------------------------------------------------


@dataclass
class TCCEntry:
    r: int
    g: float
    mu: float
    trajectory: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.trajectory[-1]


@dataclass
class TCCReport:
    spec: RGSpec
    mode: str
    q: int
    r_min: int
    ghat: float | None
    tol: float
    burn_in: int
    entries: list[TCCEntry]
    gaps: dict[int, float]
    monotone: bool
    final_gap: float
    gap_ratio: float | None
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def semigroup_defect(self) -> float:
        """Max of ``|V^(n+1) - T V^(n)|`` over stored trajectories."""
        worst = 0.0
        for e in self.entries:
            for a, b in zip(e.trajectory[:-1], e.trajectory[1:]):
                worst = max(worst, sup_gap(_step_vector(a, self.spec), b))
        return worst

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "mode": self.mode,
            "q": self.q,
            "r_min": self.r_min,
            "ghat": self.ghat,
            "tol": self.tol,
            "burn_in_r": self.burn_in,
            "entries": [
                {"r": e.r, "g": e.g, "mu": e.mu, "steps": len(e.trajectory) - 1, "V": [float(x) for x in e.final]}
                for e in self.entries
            ],
            "gaps": {str(r): g for r, g in self.gaps.items()},
            "monotone": self.monotone,
            "final_gap": self.final_gap,
            "gap_ratio": self.gap_ratio,
            "expected_ratio": float(self.spec.p) ** (-self.spec.l * self.spec.epsilon),
            "verdict": self.verdict,
        }


def _iterate(v: np.ndarray, spec: RGSpec, n: int, r: int) -> np.ndarray:
    traj = [v]
    lo, hi = default_bounds(spec)
    for i in range(n):
        try:
            v = _step_vector(v, spec)
        except RGError as exc:
            raise CriticalError(f"escape at r={r}, step {i + 1}: {exc}") from exc
        if not lo <= v[0] <= hi:
            raise CriticalError(f"escape at r={r}, step {i + 1}: v2={v[0]:.3g}")
        traj.append(v)
    return np.array(traj)


def tcc_check(
    spec: RGSpec,
    trajectory: str = "joining",
    ghat: float = 0.05,
    q: int = 0,
    r_min: int = -12,
    tol: float | None = None,
    fp: FixedPointResult | None = None,
    burn_in: int = -3,
    mu_tol: float = 1e-12,
    workers: int = 1,
) -> TCCReport:
    """Cauchy gaps ``|V_r^(q-r) - V_{r+1}^(q-r-1)|`` over ``r = q-1, ..., r_min``."""
    mode = trajectory.lower().replace("-", "_")
    if mode not in ("joining", "self_similar"):
        raise CriticalError(f"unknown trajectory {trajectory!r}")
    if q < r_min + 5:
        raise CriticalError("need q >= r_min + 5")
    if tol is None:
        tol = 1e-12 if mode == "self_similar" else 1e-4
    rs = list(range(q - 1, r_min - 1, -1))
    n = spec.n_coeffs
    if mode == "self_similar":
        if fp is None:
            fp = find_fixed_point(spec)
        vstar = fp.vector

        def entry(r):
            return TCCEntry(r, float(vstar[1]), float(vstar[0]), _iterate(vstar.copy(), spec, q - r, r))
    else:
        if not ghat > 0:
            raise CriticalError("ghat must be positive")

        def entry(r):
            g = ghat * float(spec.p) ** (spec.l * spec.epsilon * r)
            try:
                mu = critical_mu(spec, g, tol=mu_tol)
            except CriticalError as exc:
                raise CriticalError(f"critical_mu failed at r={r}: {exc}") from exc
            v = np.zeros(n)
            v[:2] = mu, g
            return TCCEntry(r, g, mu, _iterate(v, spec, q - r, r))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            entries = list(ex.map(entry, rs))
    else:
        entries = [entry(r) for r in rs]
    by_r = {e.r: e for e in entries}
    gaps = {r: sup_gap(by_r[r].final, by_r[r + 1].final) for r in rs[1:]}
    tail = [r for r in sorted(gaps, reverse=True) if r <= burn_in]
    monotone = all(gaps[a] > gaps[b] for a, b in zip(tail, tail[1:])) if mode == "joining" else True
    final_gap = gaps[r_min]
    ratio = gaps[r_min] / gaps[r_min + 1] if gaps.get(r_min + 1) else None
    ok = final_gap < tol and monotone
    if mode == "self_similar":
        ok = max(gaps.values()) < tol
    return TCCReport(spec, mode, q, r_min, ghat if mode == "joining" else None, tol, burn_in, entries, gaps, monotone, final_gap, ratio, "PASS" if ok else "FAIL")
