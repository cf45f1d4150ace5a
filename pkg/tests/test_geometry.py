import json

import numpy as np
import pytest
from scipy.linalg import expm

from kolmogorov_harnack import (ConfigError, Cylinder, Point, build_structure, membership,
                                named_cylinders, norm_B, pipeline, unit_ball_measure)
from kolmogorov_harnack.group import compose
from kolmogorov_harnack.geometry import (Box, check_inclusion_i, check_inclusion_ii, covering_box,
                                         cylinder_measure, in_closure, inclusion_constants,
                                         on_parabolic_boundary, sample_cylinder,
                                         sample_parabolic_boundary, unit_ball_volume)


def brute_membership(s, c, z):
    """``|xi|_B < r`` and ``tau in (t1, t2)`` for ``(xi, tau) = center^-1 o z``, via expm."""
    out = []
    for x, t in zip(np.atleast_2d(z.x), np.atleast_1d(z.t)):
        tau = t - float(c.center.t)
        xi = x - expm(-tau * s.B.T) @ c.center.x
        out.append(norm_B(s, xi) < c.r and c.t1 < tau < c.t2)
    return np.array(out)


def test_center_axis_and_center(proto):
    c = Cylinder(Point([0.3, -0.2], 0.5), 0.4, -0.2, -0.1)
    axis = compose(proto, c.center, Point([0.0, 0.0], -0.15))
    assert membership(proto, c, axis)
    assert not membership(proto, c, c.center)


@pytest.mark.parametrize("name", ["proto", "s21"])
def test_membership_agrees_with_brute_force(name, proto, s21):
    s = {"proto": proto, "s21": s21}[name]
    rng = np.random.default_rng(1)
    c = Cylinder(Point(rng.normal(size=s.N), 0.3), 0.8, -0.5, 0.4)
    z = Point(rng.normal(size=(3000, s.N)) * 1.5, rng.uniform(-0.5, 1.0, 3000))
    got = membership(s, c, z)
    assert np.array_equal(got, brute_membership(s, c, z))
    assert 0 < got.mean() < 1


def test_cylinder_validation_and_json():
    with pytest.raises(ConfigError):
        Cylinder(Point([0.0, 0.0], 0), 0.0, -1, 0)
    with pytest.raises(ConfigError):
        Cylinder(Point([0.0, 0.0], 0), 1.0, 0, 0)
    c = Cylinder(Point([0.1, 0.2], 0.3), 1.5, -1.0, 0.5)
    d = Cylinder.from_json(json.dumps(c.to_json()))
    assert d.r == c.r and d.t1 == c.t1 and np.array_equal(d.center.x, c.center.x)


# -- measures --------------------------------------------------------------------------

@pytest.mark.parametrize("p, blocks, expected", [
    ([1, 1], [[[1.0]]], 1.0),
    ([2], [], np.pi),
])
def test_unit_ball_measure(p, blocks, expected):
    s = build_structure(p, blocks)
    assert unit_ball_volume(s) == pytest.approx(expected, rel=1e-12)
    assert unit_ball_measure(s) == pytest.approx(expected, abs=0.01)


def test_unit_ball_volume_vs_monte_carlo(s21, s111):
    for s in (s21, s111):
        val, err = unit_ball_measure(s, samples=1_000_000, seed=7, with_error=True)
        assert abs(val - unit_ball_volume(s)) <= 5 * err


def test_measure_scaling_law(proto):
    c = Cylinder(Point([0.0, 0.0], 0.0), 1.0, 0.0, 0.3)
    for r in (0.5, 2.0):
        assert cylinder_measure(proto, c.scaled(proto, r)) == pytest.approx(
            r ** (proto.Q + 2) * cylinder_measure(proto, c), rel=1e-12)


def test_measure_is_translation_invariant_in_mc(proto):
    # the Lebesgue measure of a translated cylinder, sampled over its covering box
    rng = np.random.default_rng(3)
    c = Cylinder(Point([0.7, -0.4], 0.2), 0.6, -0.3, 0.0)
    box = covering_box(proto, c)
    n = 400_000
    z = Point(rng.uniform(box.lo, box.hi, (n, 2)), rng.uniform(box.t_lo, box.t_hi, n))
    frac = membership(proto, c, z).mean()
    est = frac * box.volume
    assert est == pytest.approx(cylinder_measure(proto, c), rel=0.02)


# -- boundary and sampling ---------------------------------------------------------------

def test_boundary_sampler(s21):
    rng = np.random.default_rng(4)
    c = Cylinder(Point([0.2, 0.0, -0.1], 0.1), 0.7, -0.4, 0.0)
    z = sample_parabolic_boundary(s21, c, 2000, rng)
    assert np.all(in_closure(s21, c, z, tol=1e-9))
    assert not np.any(membership(s21, c, z))
    assert np.all(on_parabolic_boundary(s21, c, z))


def test_cylinder_sampler_and_covering_box(s21):
    rng = np.random.default_rng(5)
    c = Cylinder(Point([0.5, -0.3, 0.2], 0.0), 0.6, -0.3, 0.2)
    z = sample_cylinder(s21, c, 5000, rng)
    assert np.all(membership(s21, c, z))
    assert np.all(covering_box(s21, c).contains(z))


def test_named_cylinders_are_nested(consts, proto):
    rng = np.random.default_rng(6)
    nc = named_cylinders(consts, 0.7, N=2)
    pairs = [(nc.Q2, nc.Q1), (nc.Q3, nc.Q1), (nc.Qminus, nc.Q3), (nc.Qplus, nc.Q2)]
    for inner, outer in pairs:
        z = sample_cylinder(proto, inner, 2000, rng)
        assert np.all(membership(proto, outer, z))


# -- inclusion constants ------------------------------------------------------------------

def test_inclusion_constants_shape(proto, consts):
    C1, C2 = inclusion_constants(proto, consts.sigma0, consts.sigbar, consts.b_B, consts.K)
    assert (C1, C2) == (consts.C1, consts.C2)
    assert C1 <= 1 / (2 * consts.K)
    C1b, _ = inclusion_constants(proto, consts.sigma0, consts.sigbar, consts.b_B, 2 * consts.K)
    assert C1b <= C1


@pytest.mark.parametrize("d1, d2", [(0.0, 0.5), (0.1, 0.3), (0.25, 0.26)])
def test_inclusion_i(proto, consts, d1, d2):
    assert check_inclusion_i(proto, consts, 1.0, d1, d2, samples=20_000) == 0


@pytest.mark.parametrize("d1, d2", [(0.0, 1.0), (0.2, 0.6), (0.5, 0.51)])
def test_inclusion_ii(proto, consts, d1, d2):
    assert check_inclusion_ii(proto, consts, 1.0, d1, d2, samples=20_000) == 0


def test_inclusions_other_structure(s21):
    c = pipeline(s21, "H1", 1.0, 1.2)
    assert check_inclusion_i(s21, c, 0.5, 0.0, 0.5, samples=20_000) == 0
    assert check_inclusion_ii(s21, c, 0.5, 0.0, 1.0, samples=20_000) == 0


def test_inclusions_can_fail(proto, consts):
    assert check_inclusion_i(proto, consts, 1.0, 0.0, 0.5, samples=20_000, inflate=10) > 0
    assert check_inclusion_ii(proto, consts, 1.0, 0.0, 1.0, samples=20_000, inflate=10) > 0


@pytest.mark.parametrize("d1, d2", [(0.3, 0.3), (0.4, 0.2), (-0.1, 0.2)])
def test_inclusion_preconditions(proto, consts, d1, d2):
    with pytest.raises(ConfigError):
        check_inclusion_i(proto, consts, 1.0, d1, d2)
    with pytest.raises(ConfigError):
        check_inclusion_ii(proto, consts, 1.0, d1, d2)


def test_box_volume_and_contains():
    b = Box([-1, 0], [1, 2], -1.0, 0.0)
    assert b.volume == 4.0
    assert b.contains(Point([0.0, 1.0], -0.5)) and not b.contains(Point([0.0, 3.0], -0.5))
