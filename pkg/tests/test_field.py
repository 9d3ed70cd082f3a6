import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from ultrarg.field import (
    CovarianceError,
    CovarianceModel,
    FieldConfig,
    MCMCError,
    MultiscaleMetropolis,
    action,
    coordinate_count,
    cov_value,
    draw_coords,
    empirical_two_point,
    exact_two_point,
    fourier_exact,
    fourier_two_point,
    l1_mass,
    level_sizes,
    mcmc_sample,
    sample_gaussian,
    sample_gaussian_batch,
    slope_fit,
    synthesize,
    synthesize_batch,
    wick_constants,
    wick_eval,
)
from ultrarg.field.observables import Correlator
from ultrarg.lattice import LatticeSpec, ultra_distance
from ultrarg.padic import PadicPoint, PadicScalar

SPEC = LatticeSpec(2, 1, 3, 0, 3)
PHI = 0.725


@pytest.fixture(scope="module")
def model():
    return CovarianceModel(SPEC, PHI)


def geometric_cov(p, phi, j0, terms=4000):
    # oracle: sum the defining series directly
    return math.fsum(p ** (-2 * j * phi) for j in range(j0, j0 + terms))


# --- covariance ------------------------------------------------------------------


def test_sigma2_closed_form(model):
    assert model.sigma2 == pytest.approx(1 / (1 - 2 ** (-1.45)), rel=1e-15)
    assert cov_value(model, 1.0) == pytest.approx(geometric_cov(2, PHI, 0), rel=1e-13)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_cov_shifted_series(model, m):
    assert cov_value(model, 2.0**m) == pytest.approx(geometric_cov(2, PHI, m), rel=1e-13)


def test_cov_at_zero_with_mesh():
    sp = LatticeSpec(3, 1, 2, -2, 1)
    mdl = CovarianceModel(sp, 0.4)
    assert cov_value(mdl, 0.0) == pytest.approx(geometric_cov(3, 0.4, -2), rel=1e-13)


def test_sigma2_near_upper_dimension():
    mdl = CovarianceModel(SPEC, 1.5 - 1e-12)
    assert mdl.sigma2 == pytest.approx(1 / (1 - 2.0**-3), rel=1e-10)


def test_phi_dim_range_enforced():
    for bad in (0.0, 1.5, -0.1, 2.0):
        with pytest.raises(CovarianceError):
            CovarianceModel(SPEC, bad)


def test_cov_rejects_bad_distance(model):
    with pytest.raises(CovarianceError):
        cov_value(model, 3.0)


def test_kernel_self_similarity():
    m0 = CovarianceModel(LatticeSpec(2, 1, 3, 0, 3), PHI)
    m1 = CovarianceModel(LatticeSpec(2, 1, 3, 1, 4), PHI)
    for m in range(2, 5):
        assert cov_value(m1, 2.0**m) == pytest.approx(2 ** (-2 * PHI) * cov_value(m0, 2.0 ** (m - 1)), rel=1e-14)


def test_wick_self_consistency():
    for p, l, phi in [(2, 1, 0.725), (3, 2, 0.6), (5, 3, 0.9)]:
        s2 = 1 / (1 - p ** (-2 * phi))
        gamma0 = sum(p ** (-2 * j * phi) for j in range(l))
        s2_l = 1 / (1 - p ** (-2 * l * phi)) * gamma0  # sigma^2 with L = p**l, same kernel
        assert s2_l == pytest.approx(p ** (-2 * l * phi) * s2_l + gamma0, rel=1e-14)
        assert s2_l == pytest.approx(s2, rel=1e-14)


# --- sampler -----------------------------------------------------------------------


def test_coordinate_count():
    assert coordinate_count(SPEC) == sum(8 ** (3 - m) for m in range(3)) + 1
    assert level_sizes(SPEC) == [512, 64, 8]


def test_zero_coords_give_zero_field(model):
    c = draw_coords(SPEC, 0)
    z = type(c)(SPEC, tuple(np.zeros_like(a) for a in c.levels), 0.0)
    assert np.all(synthesize(model, z).values == 0)


@pytest.mark.parametrize("sp", [LatticeSpec(2, 1, 2, 0, 2), LatticeSpec(3, 1, 1, -1, 2), LatticeSpec(2, 2, 1, 0, 1)])
def test_sampler_covariance_exact(sp):
    # exact law: phi = A zeta, so Cov = A A^T must equal cov_value pairwise
    mdl = CovarianceModel(sp, 0.3)
    A = synthesize_batch(mdl, np.eye(coordinate_count(sp))).T
    C = A @ A.T
    for i in range(sp.n_sites):
        for j in range(sp.n_sites):
            assert C[i, j] == pytest.approx(cov_value(mdl, ultra_distance(sp, i, j)), rel=1e-12)


def test_site_variance_from_scale_sum(model):
    amps = [2 ** (-m * PHI) for m in range(3)]
    tau2 = model.sigma2 * 2 ** (-2 * 3 * PHI)
    assert model.level_covariance(0) == pytest.approx(sum(a * a for a in amps) + tau2, rel=1e-14)


def test_zero_mode_flag(model):
    with_zm = model.level_covariance(3, True)
    without = model.level_covariance(3, False)
    assert with_zm - without == pytest.approx(model.zero_mode_variance, rel=1e-14)


def test_seed_determinism(model):
    a = sample_gaussian_batch(model, 7, 5)
    b = sample_gaussian_batch(model, 7, 5)
    c = sample_gaussian_batch(model, 8, 5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    # independent of batching: sample n depends only on (seed, n)
    assert np.array_equal(sample_gaussian_batch(model, 7, 2, start=3), a[3:5])
    assert np.array_equal(sample_gaussian(SPEC, model, 7, index=4).values, a[4])


def test_empirical_covariance_within_4se(model):
    x = sample_gaussian_batch(model, 11, 4000)
    corr = empirical_two_point(x, SPEC)
    exact = exact_two_point(model)
    z = np.abs(corr.estimate - exact.estimate) / corr.stderr
    assert np.all(z < 4), z


def test_field_config_validation():
    with pytest.raises(ValueError):
        FieldConfig(SPEC, np.zeros(3))
    with pytest.raises(ValueError):
        FieldConfig(SPEC, np.full(512, np.nan))


# --- Wick ordering and the action ---------------------------------------------


def test_wick_at_origin():
    c = 1.7
    assert wick_eval(0.0, 2, c) == -c
    assert wick_eval(0.0, 4, c) == pytest.approx(3 * c * c)


def test_wick_zero_reference_is_plain_power():
    assert wick_eval(1.3, 4, 0.0) == pytest.approx(1.3**4)
    assert wick_eval(1.3, 2, 0.0) == pytest.approx(1.3**2)


def test_wick_gaussian_moments():
    c = 1.577
    x, w = np.polynomial.hermite_e.hermegauss(40)
    x = x * math.sqrt(c)
    w = w / w.sum()
    assert abs(w @ wick_eval(x, 2, c)) < 1e-12
    assert abs(w @ wick_eval(x, 4, c)) < 1e-11


def test_wick_rejects_power():
    with pytest.raises(ValueError):
        wick_eval(1.0, 3, 1.0)


def test_action_zero_field(model):
    c = wick_constants(model)
    g, mu = 0.3, -0.2
    expected = SPEC.cell_volume * SPEC.n_sites * (3 * g * c * c - mu * c)
    assert action(FieldConfig(SPEC, np.zeros(512)), g, mu, model) == pytest.approx(expected, rel=1e-13)
    assert action(FieldConfig(SPEC, np.ones(512)), 0.0, 0.0, model) == 0.0


def test_action_rejects_negative_g(model):
    with pytest.raises(ValueError):
        action(FieldConfig(SPEC, np.zeros(512)), -1.0, 0.0, model)


def test_action_extensive():
    # fixed single-site statistics (phi = 0): doubling s multiplies by p**(d l)
    sp1, sp2 = LatticeSpec(2, 1, 2, 0, 1), LatticeSpec(2, 1, 2, 0, 2)
    m1, m2 = CovarianceModel(sp1, 0.5), CovarianceModel(sp2, 0.5)
    c = wick_constants(m1)
    m2c = wick_constants(m2)
    a1 = action(FieldConfig(sp1, np.zeros(sp1.n_sites)), 0.2, 0.1, m1) / (3 * 0.2 * c * c - 0.1 * c)
    a2 = action(FieldConfig(sp2, np.zeros(sp2.n_sites)), 0.2, 0.1, m2) / (3 * 0.2 * m2c * m2c - 0.1 * m2c)
    assert a2 / a1 == pytest.approx(4.0)


# --- MCMC ------------------------------------------------------------------------


def test_mcmc_free_acceptance_is_one(model):
    chain = MultiscaleMetropolis(model, 0.0, 0.0, seed=3)
    list(chain.run(200, burn_in=100))
    assert np.all(chain.acceptance == 1.0)


def test_mcmc_free_covariance(model):
    x = np.stack([c.values for c in mcmc_sample(SPEC, model, 0.0, 0.0, seed=5, n_sweeps=3000, burn_in=100)])
    corr = empirical_two_point(x, SPEC, batch_size=100)
    z = np.abs(corr.estimate - exact_two_point(model).estimate) / corr.stderr
    assert np.all(z < 4), z


def test_mcmc_determinism(model):
    a = [c.values for c in mcmc_sample(SPEC, model, 0.1, 0.0, seed=9, n_sweeps=20)]
    b = [c.values for c in mcmc_sample(SPEC, model, 0.1, 0.0, seed=9, n_sweeps=20)]
    assert all(np.array_equal(u, v) for u, v in zip(a, b))


def test_mcmc_thinning_count(model):
    out = list(mcmc_sample(SPEC, model, 0.1, 0.0, seed=1, n_sweeps=30, burn_in=5, thinning=3))
    assert len(out) == 10


def test_mcmc_guards(model):
    with pytest.raises(MCMCError):
        MultiscaleMetropolis(model, -0.1, 0.0, seed=0)
    big = CovarianceModel(LatticeSpec(2, 1, 3, 0, 6), PHI)
    with pytest.raises(MCMCError):
        MultiscaleMetropolis(big, 0.1, 0.0, seed=0)


def single_site_wick2(g, mu, c):
    # 1-d quadrature oracle for exp(-g:phi^4: - mu:phi^2:) dmu_c
    def w(x):
        return math.exp(-g * (x**4 - 6 * c * x * x + 3 * c * c) - mu * (x * x - c) - x * x / (2 * c))

    z = quad(w, -math.inf, math.inf, epsrel=1e-12)[0]
    return quad(lambda x: (x * x - c) * w(x), -math.inf, math.inf, epsrel=1e-12)[0] / z


def test_mcmc_quartic_sign_matches_single_site_oracle(model):
    # at mu = 0 the Wick-ordered quartic pushes E[:phi^2:] up, not down
    c = wick_constants(model)
    oracle = single_site_wick2(0.1, 0.0, c)
    x = np.stack([v.values for v in mcmc_sample(SPEC, model, 0.1, 0.0, seed=2, n_sweeps=2000, burn_in=300, thinning=5)])
    est = (x**2 - c).mean()
    assert np.sign(est) == np.sign(oracle)
    assert oracle > 0


# --- two-point observables -------------------------------------------------------


def test_exact_slope(model):
    slope, _ = slope_fit(exact_two_point(model))
    assert slope == pytest.approx(-2 * PHI, abs=1e-12)


def test_constant_correlator_slope():
    d = np.array([0.0, 2.0, 4.0, 8.0])
    corr = Correlator(np.arange(4), d, np.full(4, 3.0), np.zeros(4), 0)
    assert slope_fit(corr)[0] == pytest.approx(0.0, abs=1e-14)


def test_slope_warns_on_nonpositive():
    d = np.array([0.0, 2.0, 4.0, 8.0, 16.0])
    corr = Correlator(np.arange(5), d, np.array([1.0, 0.5, 0.25, -0.1, 0.0625]), np.full(5, 0.01), 10)
    with pytest.warns(UserWarning):
        slope_fit(corr)


def test_sampled_slope(model):
    x = sample_gaussian_batch(model, 21, 4000)
    slope, se = slope_fit(empirical_two_point(x, SPEC))
    assert abs(slope + 2 * PHI) < 3 * se


def _k(sp, n, coord=0):
    zeros = [PadicScalar.zero(sp.p)] * sp.d
    zeros[coord] = PadicScalar.from_int(sp.p**n, sp.p)
    return PadicPoint(tuple(zeros))


def test_fourier_zero_equals_l1_mass():
    sp = LatticeSpec(2, 1, 2, 0, 3)
    mdl = CovarianceModel(sp, 0.6)
    k0 = PadicPoint(tuple(PadicScalar.zero(2) for _ in range(2)))
    assert fourier_two_point(mdl, k0) == pytest.approx(l1_mass(mdl, [3])[0][1], rel=1e-13)


def test_fourier_radial_symmetry():
    sp = LatticeSpec(2, 1, 2, 0, 3)
    mdl = CovarianceModel(sp, 0.6)
    a = fourier_two_point(mdl, _k(sp, 1, 0))
    b = fourier_two_point(mdl, _k(sp, 1, 1))
    k3 = PadicPoint((PadicScalar.from_int(6, 2), PadicScalar.from_int(2, 2)))
    assert a == pytest.approx(b, rel=1e-13)
    assert a == pytest.approx(fourier_two_point(mdl, k3), rel=1e-13)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_fourier_matches_closed_form(n):
    sp = LatticeSpec(2, 1, 2, 0, 3)
    mdl = CovarianceModel(sp, 0.6)
    assert fourier_two_point(mdl, _k(sp, n)) == pytest.approx(fourier_exact(mdl, n), rel=1e-12)


def test_fourier_unresolvable():
    sp = LatticeSpec(2, 1, 2, 0, 3)
    mdl = CovarianceModel(sp, 0.6)
    k = PadicPoint((PadicScalar.from_fraction(Fraction(1, 2), 2), PadicScalar.zero(2)))
    with pytest.raises(ValueError):
        fourier_two_point(mdl, k)


def test_l1_mass_ratio():
    masses = [m for _, m in l1_mass(CovarianceModel(SPEC, PHI), range(2, 12))]
    assert masses[-1] / masses[-2] == pytest.approx(2 ** (3 - 2 * PHI), rel=1e-3)


def test_l1_mass_with_decay_converges():
    mdl = CovarianceModel(SPEC, PHI)
    masses = [m for _, m in l1_mass(mdl, range(2, 14), decay=lambda r: r**-3)]
    # oracle: the tail beyond s is bounded by a geometric series with ratio 2**(-2 phi)
    assert masses[-1] - masses[-2] < 1e-3 * masses[-1]
    assert all(b >= a for a, b in zip(masses, masses[1:]))


def test_l1_mass_needs_increasing():
    with pytest.raises(ValueError):
        l1_mass(CovarianceModel(SPEC, PHI), [3, 2])
