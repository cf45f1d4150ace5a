"""Desk-scale acceptance criteria on the prototype structure (p = [1, 1], N = 2, Q = 4).

Each test runs one criterion end to end, asserts its wall-clock limit and
prints a one-line verdict; ``conftest.py`` repeats the verdicts in the
terminal summary.
"""
import time

import numpy as np
import pytest

from kolmogorov_harnack import make_field, pipeline, random_h1_fields
from kolmogorov_harnack.solver import (gamma0_convergence, growth_experiment, harnack_campaign,
                                       oscillation_experiment)
from kolmogorov_harnack.verification import run_suite

LAM, BIG_LAM = 1.0, 1.2


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def verdict(num, text, ok, seconds):
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {text}  ({seconds:.2f} s)")


def assert_suite(num, rep, seconds, limit, counts):
    """All checks pass, each named check saw at least the stated number of samples."""
    failed = [c.to_json() for c in rep.checks if not c.passed]
    ok = not failed and seconds <= limit
    verdict(num, f"{rep.suite} suite, {sum(c.count for c in rep.checks)} cases", ok, seconds)
    assert not failed, failed
    for name, n in counts.items():
        assert rep.check(name).count >= n, name
    assert seconds <= limit


def test_criterion_01_group(proto):
    rep, dt = timed(run_suite, "group", proto, samples=10_000)
    assert_suite(1, rep, dt, 1.0, {
        "associativity": 10_000, "identity": 10_000, "inverse": 10_000,
        "automorphism": 10_000, "commutation": 10_000, "triangle": 10_000,
        "norm_comparison": 10_000, "exp_minus_identity": 10_000})


def test_criterion_02_covariance(proto):
    rep, dt = timed(run_suite, "covariance", proto, None, LAM, BIG_LAM, 1000)
    # closed form, split and derivative identity at 1e-12; sandwich at 10^3 times per matrix
    assert_suite(2, rep, dt, 1.0, {"prototype_closed_form": 1000, "split[I0]": 1000,
                                   "derivative_identity[I0]": 1000, "sandwich": 1000})


def test_criterion_03_kernels(proto, consts):
    rep, dt = timed(run_suite, "kernels", proto, consts, samples=1000)
    # normalization 1e-6 at three times, homogeneity 1e-11, derivatives 1e-6, L0 residual 1e-8
    assert_suite(3, rep, dt, 30.0, {"normalization": 3, "homogeneity": 1000,
                                    "finite_differences[grad]": 1000,
                                    "finite_differences[hess]": 1000,
                                    "L0_gamma0[closed_form]": 1000})


def test_criterion_04_bounds(proto, consts):
    rep, dt = timed(run_suite, "bounds", proto, consts, samples=10_000)
    uppers = [c for c in rep.checks if c.name.startswith("upper")]
    lowers = [c for c in rep.checks if c.name.startswith("lower")]
    assert uppers and lowers
    assert all(c.count >= 10_000 for c in uppers + lowers)
    assert_suite(4, rep, dt, 30.0, {})


def test_criterion_05_subsolution(proto):
    rep, dt = timed(run_suite, "subsolution", proto, None, LAM, BIG_LAM, 10_000)
    h2 = rep.check("h2_sign")
    # the H2 check runs inside the field's eps0 neighbourhood, where the modulus meets its bound
    assert h2.detail["modulus_at_eps0"] <= h2.detail["modulus_bound"]
    assert_suite(5, rep, dt, 60.0, {"h1_sign": 20 * 10_000, "h2_sign": 10_000})


def test_criterion_06_potentials(proto, consts):
    rep, dt = timed(run_suite, "potentials", proto, consts, samples=1000)
    # Riemann oracle 1e-4 relative, scaling 1e-6 relative, strip bound at 10^3 points
    assert_suite(6, rep, dt, 60.0, {"riemann_oracle": 3, "scaling": 1, "strip_bound": 1000})


def test_criterion_07_geometry(proto, consts):
    rep, dt = timed(run_suite, "geometry", proto, consts, samples=100_000)
    mc = rep.check("unit_ball_measure").detail["monte_carlo"]
    assert abs(mc - 1.0) <= 0.01
    names = [c.name for c in rep.checks if c.name.startswith("inclusion")]
    assert_suite(7, rep, dt, 30.0, {n: 100_000 for n in names})


def test_criterion_08_constants(proto):
    t0 = time.perf_counter()
    a = pipeline(proto, "H1", LAM, BIG_LAM)
    b = pipeline(proto, "H1", LAM, BIG_LAM)
    dt = time.perf_counter() - t0
    inv = a.invariants(proto)
    identical = a.dumps() == b.dumps()
    ok = all(inv.values()) and identical and dt <= 5.0
    verdict(8, f"constants pipeline, {len(inv)} invariants, bitwise rerun {identical}", ok, dt)
    assert all(inv.values()), inv
    assert identical
    assert a.eta > 0 and a.theta >= 2 and a.delta > 0 and a.C_harnack >= 2
    assert a.mu_upper > a.mu_lower
    assert dt <= 5.0


def test_criterion_09_convergence(proto):
    rep, dt = timed(gamma0_convergence, proto, (32, 64, 128))
    errs, orders = rep["errors"], rep["orders"]
    ok = all(o >= 0.9 for o in orders) and errs[0] > errs[1] > errs[2] and dt <= 300
    verdict(9, "solver vs Gamma0, orders " + ", ".join(f"{o:.3f}" for o in orders), ok, dt)
    assert errs[0] > errs[1] > errs[2]
    assert all(o >= 0.9 for o in orders), orders
    assert dt <= 300


def test_criterion_10_campaigns(proto, consts):
    t0 = time.perf_counter()
    field = make_field(proto, "checkerboard", LAM, BIG_LAM, seed=1)
    growth = [growth_experiment(field, consts, selector=sel) for sel in ("none", "half", "most")]
    osc = oscillation_experiment(field, consts, levels=4)
    h1 = harnack_campaign(random_h1_fields(proto, LAM, BIG_LAM, 20, seed=7), consts,
                          data_count=10)

    # H2: smooth fields with a modulus of continuity, checked at r = r0
    s0 = 1.0 / proto.Q
    h2_fields = [make_field(proto, "smooth-oscillatory", LAM, BIG_LAM, seed=k) for k in range(4)]
    eps0 = min(min(f.eps0(s0 * LAM / (2 + s0)) for f in h2_fields), 1 - 1e-12)
    c2 = pipeline(proto, "H2", LAM, BIG_LAM, eps0_H2=eps0)
    h2 = harnack_campaign(h2_fields, c2, data_count=3, r=c2.r0)
    dt = time.perf_counter() - t0

    parts = {"growth": all(g["passed"] for g in growth), "oscillation": osc["passed"],
             "harnack_h1": h1["passed"], "harnack_h2": h2["passed"]}
    ok = all(parts.values()) and dt <= 900
    verdict(10, f"campaigns {parts}, H1 max ratio {h1['max_ratio']:.4g}, "
                f"H2 max ratio {h2['max_ratio']:.4g}", ok, dt)
    assert all(parts.values()), parts
    assert h1["fields"] == 20 and h1["data"] == 10 and h1["violations"] == 0
    assert len(osc["levels"]) == 4 and osc["decay_ok"]
    assert all(np.isfinite(r) for r in osc["ratios"])
    assert h2["violations"] == 0 and c2.r0 == pytest.approx(h2["r"])
    assert dt <= 900
