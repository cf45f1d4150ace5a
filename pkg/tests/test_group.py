import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.optimize import minimize

from kolmogorov_harnack import (ConfigError, Point, build_structure, compose, dilate, inverse,
                                matrix_E, norm_B, prototype, sigma_bounds)
from kolmogorov_harnack.group import BlockStructure, apply_E, dilation_matrix, norm_B_spacetime

finite = st.floats(-3, 3, allow_nan=False)


def pt(x, t):
    return Point(np.array(x, dtype=float), float(t))


def close(a: Point, b: Point, tol=1e-12):
    return np.allclose(a.x, b.x, rtol=tol, atol=tol) and np.allclose(a.t, b.t, rtol=tol, atol=tol)


# -- structure validation ---------------------------------------------------------

@pytest.mark.parametrize("p, blocks, N, Q, n", [
    ([1, 1], [[[1.0]]], 2, 4, 1),
    ([2, 1], [[[1.0], [0.0]]], 3, 5, 1),
    ([2], [], 2, 2, 0),
    ([1, 1, 1], [[[1.0]], [[2.0]]], 3, 9, 2),
    ([2, 2], [np.eye(2)], 4, 8, 1),
])
def test_dimensions(p, blocks, N, Q, n):
    s = build_structure(p, blocks)
    assert (s.N, s.Q, s.n) == (N, Q, n)
    assert s.degrees.tolist() == sum(([2 * i + 1] * pi for i, pi in enumerate(p)), [])


@pytest.mark.parametrize("p, blocks", [
    ([1, 2], [[[1.0, 0.0]]]),            # increasing sizes
    ([2, 1], [[[0.0], [0.0]]]),          # zero block
    ([2, 2], [[[1.0, 1.0], [1.0, 1.0]]]),  # rank one
    ([1, 1], []),                        # missing block
    ([1, 1], [[[1.0, 0.0]]]),            # wrong shape
    ([], []),
    ([0], []),
])
def test_invalid_structures(p, blocks):
    with pytest.raises(ConfigError):
        build_structure(p, blocks)


def test_structure_json_roundtrip(s21):
    s = BlockStructure.from_json(s21.to_json())
    assert np.array_equal(s.B, s21.B) and s.p == s21.p
    with pytest.raises(ConfigError):
        BlockStructure.from_json({"blocks": []})


def test_prototype_drift_and_norm_of_blocks(proto):
    assert np.array_equal(proto.B, [[0.0, 1.0], [0.0, 0.0]])
    assert proto.M_B == 1.0
    assert proto.c_nB == 1.0


# -- the matrix E -------------------------------------------------------------------

def test_E_prototype_values(proto):
    assert np.array_equal(matrix_E(proto, 1.0), [[1, 0], [-1, 1]])
    assert np.array_equal(matrix_E(proto, -2.0), [[1, 0], [2, 1]])
    assert np.array_equal(matrix_E(proto, 0.0), np.eye(2))


@pytest.mark.parametrize("sigma", [-2.5, -0.3, 0.0, 0.7, 3.0])
def test_E_matches_expm(s111, s21, sigma):
    for s in (s111, s21):
        assert np.allclose(matrix_E(s, sigma), expm(-sigma * s.B.T), atol=1e-13)


def test_E_batch_and_apply(s111):
    rng = np.random.default_rng(1)
    sig = rng.normal(size=7)
    x = rng.normal(size=(7, 3))
    ref = np.einsum("kij,kj->ki", matrix_E(s111, sig), x)
    assert np.allclose(apply_E(s111, sig, x), ref, atol=1e-13)


@given(a=finite, b=finite)
def test_E_is_a_one_parameter_group(a, b):
    s = build_structure([1, 1, 1], [[[1.0]], [[-0.5]]])
    assert np.allclose(matrix_E(s, a) @ matrix_E(s, b), matrix_E(s, a + b), atol=1e-10)


# -- group law --------------------------------------------------------------------------

def test_compose_and_inverse_examples(proto):
    assert close(compose(proto, pt([1, 0], 0), pt([0, 0], 1)), pt([1, -1], 1))
    assert close(inverse(proto, pt([1, 0], 1)), pt([-1, -1], -1))
    assert close(dilate(proto, 2.0, pt([1, 1], 1)), pt([2, 8], 4))


points2 = st.builds(lambda a, b, c: pt([a, b], c), finite, finite, finite)


@settings(max_examples=200)
@given(z=points2, w=points2, v=points2)
def test_associativity(z, w, v):
    s = prototype()
    lhs = compose(s, compose(s, z, w), v)
    rhs = compose(s, z, compose(s, w, v))
    assert close(lhs, rhs, 1e-10)


@given(z=points2)
def test_inverse_and_identity(z):
    s = prototype()
    o = Point.origin(2)
    assert close(compose(s, z, inverse(s, z)), o, 1e-10)
    assert close(compose(s, inverse(s, z), z), o, 1e-10)
    assert close(compose(s, z, o), z) and close(compose(s, o, z), z)
    assert close(inverse(s, inverse(s, z)), z, 1e-10)


@given(z=points2, w=points2, r=st.floats(0.1, 5))
def test_dilation_is_an_automorphism(z, w, r):
    s = prototype()
    lhs = dilate(s, r, compose(s, z, w))
    rhs = compose(s, dilate(s, r, z), dilate(s, r, w))
    assert close(lhs, rhs, 1e-9)


@pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
def test_dilation_commutes_with_E(s111, r):
    D, Dinv = dilation_matrix(s111, r), dilation_matrix(s111, 1 / r)
    for sig in (-1.2, 0.4, 2.0):
        assert np.allclose(D @ matrix_E(s111, sig) @ Dinv, matrix_E(s111, r * r * sig), atol=1e-12)


def test_dilate_rejects_nonpositive(proto):
    with pytest.raises(ValueError):
        dilate(proto, 0.0, pt([1, 1], 1))


# -- homogeneous norm ---------------------------------------------------------------

def test_norm_examples(proto):
    assert norm_B(proto, [0.0, 8.0]) == pytest.approx(2.0)
    assert norm_B(proto, [3.0, -8.0]) == pytest.approx(5.0)
    assert norm_B_spacetime(proto, pt([1, 1], 4)) == pytest.approx(4.0)


@given(x=st.lists(finite, min_size=3, max_size=3), r=st.floats(0.05, 20))
def test_norm_homogeneity(x, r):
    s = build_structure([1, 1, 1], [[[1.0]], [[1.0]]])
    x = np.array(x)
    assert norm_B(s, dilation_matrix(s, r) @ x) == pytest.approx(r * norm_B(s, x), rel=1e-12,
                                                                 abs=1e-12)


def _sphere_extremes_oracle(s, k=200_001):
    """Block norms on the unit sphere only see the squared masses; brute force over them."""
    q = np.array([1 / (2 * (2 * i + 1)) for i in range(s.n + 1)])
    if s.n == 0:
        return 1.0, 1.0
    if s.n == 1:
        w = np.linspace(0, 1, k)
        vals = w ** q[0] + (1 - w) ** q[1]
        return vals.min(), vals.max()
    # n = 2: a grid over the simplex, the maximum polished by a local optimizer
    g = np.linspace(0, 1, 1001)
    a, b = np.meshgrid(g, g, indexing="ij")
    c = 1 - a - b
    ok = c >= 0
    vals = np.where(ok, a ** q[0] + b ** q[1] + np.clip(c, 0, None) ** q[2], np.nan)
    i = np.nanargmax(vals)

    def neg(v):
        return -(v[0] ** q[0] + v[1] ** q[1] + max(1 - v[0] - v[1], 0) ** q[2])

    res = minimize(neg, [a.flat[i], b.flat[i]], method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14})
    return np.nanmin(vals), max(np.nanmax(vals), -res.fun)


@pytest.mark.parametrize("name", ["proto", "s21", "s111", "p2"])
def test_sigma_bounds_against_oracle(name, proto, s21, s111):
    s = {"proto": proto, "s21": s21, "s111": s111, "p2": build_structure([2], [])}[name]
    lo, hi = _sphere_extremes_oracle(s)
    sig0, sigbar = sigma_bounds(s)
    assert sig0 == pytest.approx(lo, abs=1e-6)
    assert sigbar >= hi - 1e-12 and sigbar == pytest.approx(hi, abs=1e-6)


def test_prototype_sigma_bounds(proto):
    sig0, sigbar = sigma_bounds(proto)
    assert sig0 == pytest.approx(1.0, abs=1e-6)
    assert sigbar == pytest.approx(1.66024, abs=1e-5)


@settings(max_examples=100)
@given(x=st.lists(st.floats(-10, 10), min_size=2, max_size=2).filter(
    lambda v: np.linalg.norm(v) > 1e-3))
def test_norm_comparison_on_sphere(x):
    s = prototype()
    x = np.array(x) / np.linalg.norm(x)
    sig0, sigbar = sigma_bounds(s)
    v = norm_B(s, x)
    assert sig0 - 1e-9 <= v <= sigbar + 1e-9


def test_point_json_and_batches():
    z = Point(np.zeros((4, 2)), 1.0)
    assert z.t.shape == (4,) and len(z) == 4
    assert close(Point.from_json(z[0].to_json()), z[0])
    assert close(Point.from_json([1.0, 2.0, 3.0]), pt([1, 2], 3))
