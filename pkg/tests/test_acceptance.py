"""End-to-end acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary and
printed immediately) before asserting.
"""

import math
import time

import numpy as np
from scipy.integrate import quad

from conftest import ACCEPTANCE
from ultrarg.critical import critical_mu, find_fixed_point, tcc_check, unstable_manifold
from ultrarg.field import (
    CovarianceModel,
    MultiscaleMetropolis,
    empirical_two_point,
    exact_two_point,
    fourier_exact,
    fourier_two_point,
    l1_mass,
    sample_gaussian_batch,
    slope_fit,
    wick_constants,
)
from ultrarg.field.observables import _wls_slope
from ultrarg.lattice import LatticeSpec, site_to_point, ultra_distance
from ultrarg.padic import PadicPoint, PadicScalar, embed, norm, point_norm, polar_part
from ultrarg.rg import RGSpec, linearize, sup_gap


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# 1 ------------------------------------------------------------------------------


def test_criterion_01_padic_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    failures = 0
    n = 10**5
    prec = 20
    for p in (2, 3, 5):
        # random elements: valuation in [-6, 6], unit digits uniform with a nonzero leading digit
        lead = rng.integers(1, p, (n, 2))
        tail = rng.integers(0, p ** (prec - 1), (n, 2))
        vals = rng.integers(-6, 7, (n, 2))
        units = (tail * p + lead).tolist()
        for (ux, uy), (vx, vy) in zip(units, vals.tolist()):
            x = PadicScalar.from_int(ux, p, prec).shift(vx)
            y = PadicScalar.from_int(uy, p, prec).shift(vy)
            nx, ny = norm(x), norm(y)
            ns = norm(x + y)
            top = nx if nx > ny else ny
            bad = ns > top or (nx != ny and ns != top)
            bad |= norm(x * y) != nx * ny
            rem = x - embed(polar_part(x), prec)
            bad |= not (rem.is_zero or norm(rem) <= 1)
            failures += bad
    dt = time.perf_counter() - t0
    record(1, failures == 0 and dt < 10, f"{3 * n} pairs, {failures} failures, {dt:.1f}s (limit 10s)")


# 2 ------------------------------------------------------------------------------


def test_criterion_02_lattice_consistency():
    t0 = time.perf_counter()
    sp = LatticeSpec(2, 1, 3, 0, 3)
    pts = [site_to_point(sp, i) for i in range(sp.n_sites)]
    mism = 0
    for i in range(sp.n_sites):
        pi = pts[i]
        for j in range(sp.n_sites):
            mism += ultra_distance(sp, i, j) != float(point_norm(pi - pts[j]))
    dt = time.perf_counter() - t0
    record(2, mism == 0 and dt < 5, f"{sp.n_sites**2} ordered pairs, {mism} mismatches, {dt:.1f}s (limit 5s)")


# 3 ------------------------------------------------------------------------------


def test_criterion_03_gaussian_sampler():
    t0 = time.perf_counter()
    model = CovarianceModel(LatticeSpec(2, 1, 3, 0, 3), 0.725)
    x = sample_gaussian_batch(model, 2024, 20000, True)
    corr = empirical_two_point(x, model.spec)
    exact = exact_two_point(model, True)
    z = np.abs(corr.estimate - exact.estimate) / corr.stderr
    slope, se = slope_fit(corr)
    dt = time.perf_counter() - t0
    ok = np.all(z < 4) and abs(slope + 1.45) < 3 * se and dt < 60
    record(3, ok, f"max |z| = {z.max():.2f}, slope {slope:.4f} +- {se:.4f} vs -1.45, {dt:.1f}s")


# 4 ------------------------------------------------------------------------------


def test_criterion_04_fourier_law():
    t0 = time.perf_counter()
    sp = LatticeSpec(2, 1, 3, 0, 5)
    model = CovarianceModel(sp, 0.725)
    ks, vals, worst = [], [], 0.0
    for n in range(1, 5):
        k = PadicPoint((PadicScalar.from_int(2**n, 2), PadicScalar.zero(2), PadicScalar.zero(2)))
        v = fourier_two_point(model, k)
        worst = max(worst, abs(v / fourier_exact(model, n) - 1))
        ks.append(2.0**-n)
        vals.append(v)
    slope, _ = _wls_slope(np.log(ks), np.log(vals), None)
    target = 2 * 0.725 - 3
    dt = time.perf_counter() - t0
    ok = abs(slope / target - 1) < 0.05 and dt < 60
    record(4, ok, f"slope {slope:.4f} vs {target:.4f} ({abs(slope / target - 1):.1%}), closed-form dev {worst:.1e}, {dt:.1f}s")


# 5 ------------------------------------------------------------------------------


def test_criterion_05_masslessness():
    t0 = time.perf_counter()
    model = CovarianceModel(LatticeSpec(2, 1, 3, 0, 3), 0.725)
    masses = [m for _, m in l1_mass(model, range(2, 9))]
    ratios = [b / a for a, b in zip(masses, masses[1:])]
    target = 2 ** (3 - 2 * 0.725)
    dev = max(abs(r / target - 1) for r in ratios)
    dt = time.perf_counter() - t0
    record(5, dev < 0.05 and dt < 5, f"ratios {np.round(ratios, 4).tolist()} vs {target:.4f}, max dev {dev:.2%}, {dt:.2f}s")


# 6 ------------------------------------------------------------------------------


def test_criterion_06_gaussian_rg():
    t0 = time.perf_counter()
    worst = 0.0
    for eps in (0.05, 0.1, 0.2):
        sp = RGSpec.bms(eps, quad_order=80, k_max=8)
        J = linearize(np.zeros(4), sp)
        exact = np.diag([2.0 ** (3 - k * sp.phi_dim) for k in (2, 4, 6, 8)])
        worst = max(worst, np.max(np.abs(J - exact)))
        worst = max(worst, abs(J[0, 0] - 2 ** ((3 + eps) / 2)), abs(J[1, 1] - 2**eps))
    dt = time.perf_counter() - t0
    record(6, worst < 1e-6 and dt < 10, f"max abs error {worst:.1e}, {dt:.2f}s")


# 7 ------------------------------------------------------------------------------


def test_criterion_07_ir_fixed_point():
    t0 = time.perf_counter()
    ok, notes, v4 = True, [], {}
    for eps in (0.05, 0.1, 0.2):
        fp = find_fixed_point(RGSpec.bms(eps))
        fine = find_fixed_point(RGSpec.bms(eps, k_max=10, quad_order=160))
        shift_v = np.max(np.abs(fine.vector[:4] / fp.vector - 1))
        shift_l = np.max(np.abs(fine.eigenvalues[:2] / fp.eigenvalues[:2] - 1))
        v4[eps] = fp.vector[1]
        good = fp.residual < 1e-10 and fp.vector[1] > 0 and fp.n_relevant == 1 and shift_v < 0.01 and shift_l < 0.01
        ok &= good
        notes.append(f"eps={eps}: res {fp.residual:.0e}, #rel {fp.n_relevant}, shift {max(shift_v, shift_l):.1e}")
    ratio = v4[0.05] / v4[0.1]
    dt = time.perf_counter() - t0
    ok &= 0.35 <= ratio <= 0.65 and dt < 120
    record(7, ok, "; ".join(notes) + f"; v4 ratio {ratio:.3f}; {dt:.1f}s")


# 8 ------------------------------------------------------------------------------


def test_criterion_08_manifold_join():
    t0 = time.perf_counter()
    spec = RGSpec.bms(0.1)
    fp = find_fixed_point(spec)
    tr = unstable_manifold(spec, "gaussian", target=fp.vector)
    dist = sup_gap(tr.terminal, fp.vector)
    dt = time.perf_counter() - t0
    record(8, dist < 1e-6 and dt < 120, f"terminal distance {dist:.2e} after {len(tr.trajectory) - 1} steps, {dt:.1f}s")


# 9 ------------------------------------------------------------------------------


def test_criterion_09_tcc():
    t0 = time.perf_counter()
    spec = RGSpec.bms(0.1)
    ss = tcc_check(spec, "self_similar")
    jn = tcc_check(spec, "joining", ghat=0.05, q=0, r_min=-12)
    tail = [jn.gaps[r] for r in range(-3, -13, -1)]
    monotone = all(a > b for a, b in zip(tail, tail[1:]))
    target = 2**-0.1
    ratio_ok = abs(jn.gap_ratio / target - 1) < 0.25
    dt = time.perf_counter() - t0
    ss_ok = max(ss.gaps.values()) < 1e-12
    ok = ss_ok and monotone and jn.final_gap < 1e-4 and ratio_ok and dt < 300
    record(
        9,
        ok,
        f"self-similar max gap {max(ss.gaps.values()):.1e}; joining monotone={monotone}, "
        f"final gap {jn.final_gap:.3e} (tol 1e-4), ratio {jn.gap_ratio:.3f} vs {target:.3f}; {dt:.1f}s",
    )


# 10 -----------------------------------------------------------------------------


def _single_site_wick2(g, mu, c):
    def w(x):
        return math.exp(-g * (x**4 - 6 * c * x * x + 3 * c * c) - mu * (x * x - c) - x * x / (2 * c))

    z = quad(w, -math.inf, math.inf, epsrel=1e-12)[0]
    return quad(lambda x: (x * x - c) * w(x), -math.inf, math.inf, epsrel=1e-12)[0] / z


def _chain(model, g, mu, seed, sweeps=10**4, burn=1000):
    ch = MultiscaleMetropolis(model, g, mu, seed)
    x = np.stack([c.values for c in ch.run(sweeps, burn, 1)])
    return ch, x


def test_criterion_10_mcmc():
    t0 = time.perf_counter()
    model = CovarianceModel(LatticeSpec(2, 1, 3, 0, 3), 0.725)
    ch0, x0 = _chain(model, 0.0, 0.0, 1)
    acc_ok = bool(np.all(ch0.acceptance == 1.0))
    c0 = empirical_two_point(x0, model.spec, 100)
    z0 = np.abs(c0.estimate - exact_two_point(model).estimate) / c0.stderr

    mu = critical_mu(RGSpec.bms(0.1), 0.1)
    _, xa = _chain(model, 0.1, mu, 2)
    _, xb = _chain(model, 0.1, mu, 3)
    ca, cb = empirical_two_point(xa, model.spec, 100), empirical_two_point(xb, model.spec, 100)
    zab = np.abs(ca.estimate - cb.estimate) / np.hypot(ca.stderr, cb.stderr)
    c = wick_constants(model)
    est = float(np.mean(np.concatenate([xa, xb]) ** 2 - c))
    oracle = _single_site_wick2(0.1, mu, c)
    sign_ok = est < 0 and oracle < 0
    dt = time.perf_counter() - t0
    ok = acc_ok and np.all(z0 < 4) and np.all(zab < 4) and sign_ok and dt < 600
    record(
        10,
        ok,
        f"g=0 acceptance 1: {acc_ok}, max z {z0.max():.2f}; mu_c={mu:.6f}, chain max z {zab.max():.2f}; "
        f"E[:phi^2:] chain {est:.4f} oracle {oracle:.4f}; {dt:.1f}s",
    )
