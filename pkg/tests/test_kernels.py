import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad

from kolmogorov_harnack import (ConfigError, HypothesisViolation, Point, apply_LA_to_kernel,
                                dilate, gamma0, gamma_sb, h1_kernel, h2_kernel, kernel_derivatives,
                                kernel_params, make_field, prototype, random_h1_fields)
from kolmogorov_harnack.covariance import unit_covariance
from kolmogorov_harnack.fields import CoefficientField
from kolmogorov_harnack.geometry import Cylinder, sample_cylinder, sample_sphere
from kolmogorov_harnack.group import apply_E, compose
from kolmogorov_harnack.kernels import (apply_LA_direct, bound_lower_core, bound_upper_shell,
                                        check_subsolution_H2, gamma0_constant, gamma_translated,
                                        log_gamma_sb, log_gamma_translated)
from kolmogorov_harnack.verification import fd_derivatives


def pole_free(s, count, rng, tmin=0.05, tmax=2.0):
    t = rng.uniform(tmin, tmax, count)
    x = rng.standard_normal((count, s.N)) * t[:, None] ** (0.5 * s.degrees)
    return Point(x, t)


def test_c0_value(proto):
    c0 = np.sqrt(3) / (2 * np.pi)
    assert gamma0_constant(unit_covariance(proto)) == pytest.approx(c0, rel=1e-13)
    assert gamma0(proto, None, Point([0.0, 0.0], 1.0)) == pytest.approx(c0, rel=1e-13)


@pytest.mark.parametrize("t", [-1.0, 0.0])
def test_vanishes_before_pole(proto, t):
    assert gamma0(proto, None, Point([0.3, 0.1], t)) == 0.0
    assert gamma_sb(h1_kernel(proto, 1.0, 1.2), Point([0.3, 0.1], t)) == 0.0


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_normalization(proto, t):
    c = unit_covariance(proto)(t)
    a, b = 12 * np.sqrt(c[0, 0]), 12 * np.sqrt(c[1, 1])
    val, _ = dblquad(lambda x2, x1: float(gamma0(proto, None, Point([x1, x2], t))),
                     -a, a, -b, b, epsabs=1e-12, epsrel=1e-10)
    assert val == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("sexp, beta", [(1.0, 1.0), (1.2, 1.0), (1.25, 0.8), (0.7, 2.0)])
def test_unit_point_value(proto, sexp, beta):
    assert gamma_sb(kernel_params(proto, sexp, beta), Point([0.0, 0.0], 1.0)) == 1.0


def test_reduces_to_fundamental_solution(s21):
    kp = kernel_params(s21, 1.0, 1.0)
    rng = np.random.default_rng(2)
    z = pole_free(s21, 200, rng)
    c0 = gamma0_constant(kp.cp)
    assert np.allclose(gamma_sb(kp, z), gamma0(s21, None, z) / c0, rtol=1e-12, atol=0)


@settings(max_examples=200)
@given(x1=st.floats(-2, 2), x2=st.floats(-2, 2), t=st.floats(0.05, 3), r=st.floats(0.2, 5))
def test_homogeneity(x1, x2, t, r):
    s = prototype()
    kp = kernel_params(s, 1.2, 1.0)
    z = Point([x1 * np.sqrt(t), x2 * t ** 1.5], t)
    lhs = log_gamma_sb(kp, dilate(s, r, z))
    rhs = -kp.s * s.Q * np.log(r) + log_gamma_sb(kp, z)
    assert abs(np.exp(lhs - rhs) - 1) <= 1e-11


def test_translated_identity_and_pole(s21):
    kp = h1_kernel(s21, 1.0, 1.2)
    rng = np.random.default_rng(4)
    z = pole_free(s21, 50, rng)
    o = Point(np.zeros((50, 3)), np.zeros(50))
    assert np.array_equal(gamma_translated(kp, o, z), gamma_sb(kp, z))
    assert np.all(gamma_translated(kp, z, z) == 0)
    assert np.all(np.isneginf(log_gamma_translated(kp, z, z)))


def test_translated_matches_direct_argument(s21):
    kp = h1_kernel(s21, 1.0, 1.2)
    rng = np.random.default_rng(6)
    zeta = Point(rng.normal(size=(300, 3)), rng.normal(size=300))
    w = pole_free(s21, 300, rng)
    z = compose(s21, zeta, w)
    # Gamma(zeta^-1 o z) has argument (x - E(t - tau) xi, t - tau)
    arg = Point(z.x - apply_E(s21, z.t - zeta.t, zeta.x), z.t - zeta.t)
    assert np.allclose(gamma_translated(kp, zeta, z), gamma_sb(kp, arg), rtol=1e-10, atol=0)


def test_derivatives_at_spatial_origin(s21):
    kp = kernel_params(s21, 1.25, 0.8)
    t = 0.7
    d = kernel_derivatives(kp, Point(np.zeros(3), t))
    assert d.value == pytest.approx(t ** (-kp.s * s21.Q / 2), rel=1e-14)
    assert np.array_equal(d.grad, np.zeros(3))
    inv = np.linalg.inv(kp.cp(t))
    assert np.allclose(d.hess, -inv * d.value / (2 * kp.beta), rtol=1e-10)


@pytest.mark.parametrize("name", ["proto", "s21"])
def test_derivatives_vs_finite_differences(name, proto, s21):
    s = {"proto": proto, "s21": s21}[name]
    kp = h1_kernel(s, 1.0, 1.2)
    z = pole_free(s, 200, np.random.default_rng(8))
    d = kernel_derivatives(kp, z)
    fd = dict(zip(("value", "grad", "hess", "dt"), fd_derivatives(kp, z)))
    for key in ("value", "grad", "hess", "dt"):
        a, b = getattr(d, key), fd[key]
        scale = np.max(np.abs(b).reshape(len(z), -1), axis=1)
        err = np.max(np.abs(a - b).reshape(len(z), -1), axis=1) / scale
        assert err.max() <= 1e-6, key


# -- the operator applied to kernels ------------------------------------------------

@pytest.mark.parametrize("name", ["proto", "s21"])
def test_fundamental_solution_is_annihilated(name, proto, s21):
    s = {"proto": proto, "s21": s21}[name]
    f = make_field(s, "constant", 1.0, 1.0)
    kp = kernel_params(s, 1.0, 1.0)
    rng = np.random.default_rng(9)
    zeta = Point(rng.normal(size=(500, s.N)), rng.normal(size=500))
    z = compose(s, zeta, pole_free(s, 500, rng))
    val, scale = apply_LA_to_kernel(f, kp, zeta, z, return_scale=True)
    assert np.all(np.abs(val) <= 1e-10 * scale)
    direct = apply_LA_direct(f, kp, zeta, z)
    assert np.all(np.abs(direct) <= 1e-8 * scale)


def test_closed_form_matches_assembled_operator(s21):
    f = make_field(s21, "smooth-oscillatory", 1.0, 1.2, seed=3)
    kp = h1_kernel(s21, 1.0, 1.2)
    rng = np.random.default_rng(10)
    zeta = Point(rng.normal(size=(300, 3)), rng.normal(size=300))
    z = compose(s21, zeta, pole_free(s21, 300, rng))
    val, scale = apply_LA_to_kernel(f, kp, zeta, z, return_scale=True)
    assert np.all(np.abs(val - apply_LA_direct(f, kp, zeta, z)) <= 1e-8 * scale)


def test_LA_needs_later_time(proto):
    f = make_field(proto, "constant", 1.0, 1.0)
    with pytest.raises(ValueError):
        apply_LA_to_kernel(f, kernel_params(proto, 1, 1), Point([0.0, 0.0], 1.0),
                           Point([0.0, 0.0], 1.0))


def sign_samples(s, f, kp, count, rng):
    zeta = Point(rng.uniform(-2, 2, (count, s.N)), rng.uniform(-2, 2, count))
    w = pole_free(s, count, rng, 1e-3, 2.0)
    return apply_LA_to_kernel(f, kp, zeta, compose(s, zeta, w), return_scale=True)


@pytest.mark.parametrize("name", ["proto", "s21"])
def test_h1_subsolution_sign(name, proto, s21):
    s = {"proto": proto, "s21": s21}[name]
    kp = h1_kernel(s, 1.0, 1.2)
    rng = np.random.default_rng(12)
    for f in random_h1_fields(s, 1.0, 1.2, 5, seed=1):
        val, scale = sign_samples(s, f, kp, 2000, rng)
        assert np.all(val >= -1e-12 * scale)


def test_sign_fails_beyond_cordes_landis(proto):
    # checkerboard with ratio 2 > 1 + 2/Q; the largest admissible exponent below the
    # integrability threshold cannot make the kernel a subsolution
    f = make_field(proto, "checkerboard", 1.0, 2.0, {"cell": 0.3, "low": 1.0, "high": 2.0}, seed=1)
    kp = kernel_params(proto, 1 + 2 / proto.Q - 1e-3, 1.0)
    assert kp.integrable
    val, scale = sign_samples(proto, f, kp, 10_000, np.random.default_rng(13))
    assert np.any(val < -1e-12 * scale)
    # the matched exponent s = Lambda/lambda = 2 restores the sign but loses integrability
    assert not h1_kernel(proto, 1.0, 2.0).integrable


# -- frozen-coefficient kernel under a modulus of continuity -------------------------

def _lipschitz_field(s, L, value=1.0):
    def ev(x, t):
        return np.broadcast_to(value * np.eye(s.p0), x.shape[:-1] + (s.p0, s.p0)).copy()
    return CoefficientField(s, ev, 1.0, 1.2, modulus=lambda e: L * e)


def test_h2_constant_field_passes(proto):
    f = make_field(proto, "constant", 1.0, 1.2, {"A0": [[1.1]]})
    kp = h2_kernel(proto, [[1.1]])
    rep = check_subsolution_H2(f, kp, Point.origin(2), 0.9, samples=2000)
    assert rep["passed"] and rep["M1_min_eig"] >= 0


def test_h2_lipschitz_boundary_case(proto):
    s0 = 1 / proto.Q
    f = _lipschitz_field(proto, s0 / (2 + s0))
    rep = check_subsolution_H2(f, h2_kernel(proto, [[1.0]]), Point.origin(2), 1.0,
                               samples=2000)
    assert rep["passed"]
    with pytest.raises(HypothesisViolation):
        check_subsolution_H2(_lipschitz_field(proto, 1.01 * s0 / (2 + s0)),
                             h2_kernel(proto, [[1.0]]), Point.origin(2), 1.0)


def test_h2_square_root_modulus(proto):
    def ev(x, t):
        u = x[..., 0]
        a = np.clip(1.1 + 0.05 * np.sign(u) * np.sqrt(np.abs(u)), 1.0, 1.2)
        return a[..., None, None] * np.ones((1, 1))

    f = CoefficientField(proto, ev, 1.0, 1.2, modulus=np.sqrt)
    s0 = 1 / proto.Q
    eps0 = (s0 * f.lam / (2 + s0)) ** 2
    assert f.eps0(s0 * f.lam / (2 + s0)) == pytest.approx(eps0, rel=1e-12)
    rep = check_subsolution_H2(f, h2_kernel(proto, [[1.1]]), Point.origin(2), eps0,
                               samples=10_000)
    assert rep["passed"] and rep["negative"] == 0


def test_h2_rejects_mismatched_kernel(proto):
    f = make_field(proto, "constant", 1.0, 1.2, {"A0": [[1.1]]})
    with pytest.raises(ConfigError):
        check_subsolution_H2(f, h2_kernel(proto, [[1.0]]), Point.origin(2), 0.5)
    with pytest.raises(ConfigError):
        check_subsolution_H2(f, h1_kernel(proto, 1.0, 1.2), Point.origin(2), 0.5)
    with pytest.raises(ConfigError):
        h2_kernel(proto, [[1.0]], s0=0.6)


# -- pointwise bounds on the cylinders ----------------------------------------------

@pytest.mark.parametrize("r", [1.0, 0.5])
def test_upper_bound_on_shell(proto, consts, r):
    kp = h1_kernel(proto, 1.0, 1.2)
    rng = np.random.default_rng(14)
    n, b = 2000, consts.b_B
    o = Point.origin(2)
    for K in (consts.K1, consts.K):
        x = sample_sphere(proto, K * r, n, rng)
        z = Point(x, rng.uniform(-b * r * r, 0, n))
        zeta = sample_cylinder(proto, Cylinder(o, consts.sigma0 * r, -b * r * r,
                                               -0.5 * b * r * r), n, rng)
        res = bound_upper_shell(kp, r, K, z, zeta, consts)
        assert np.all(res.slack >= 0)


@pytest.mark.parametrize("r", [1.0, 0.5])
def test_lower_bound_between_cylinders(proto, consts, r):
    kp = h1_kernel(proto, 1.0, 1.2)
    rng = np.random.default_rng(15)
    n, b, o = 2000, consts.b_B, Point.origin(2)
    z = sample_cylinder(proto, Cylinder(o, consts.sigma0 * r, -0.25 * b * r * r, 0.0), n, rng)
    zeta = sample_cylinder(proto, Cylinder(o, consts.sigma0 * r, -b * r * r, -0.5 * b * r * r),
                           n, rng)
    res = bound_lower_core(kp, r, z, zeta, consts)
    assert np.all(res.slack >= 0)


def test_bounds_reject_points_outside(proto, consts):
    kp = h1_kernel(proto, 1.0, 1.2)
    far = Point([5.0, 0.0], -0.01)
    zeta = Point([0.0, 0.0], -0.8 * consts.b_B)
    with pytest.raises(ValueError):
        bound_lower_core(kp, 1.0, far, zeta, consts)
    with pytest.raises(ValueError):
        bound_upper_shell(kp, 1.0, consts.K, far, zeta, consts)


def test_upper_bound_trivial_when_pole_is_later(proto, consts):
    kp = h1_kernel(proto, 1.0, 1.2)
    # the kernel vanishes when the pole is not earlier than the evaluation point
    assert np.isneginf(log_gamma_translated(kp, Point([0.0, 0.0], 0.0),
                                            Point([1.0, 0.0], -0.1)))
