"""Sampling and quadrature campaigns for every numerical layer of the package.

Each suite returns a :class:`SuiteReport` made of :class:`Check` records. A
check counts how many sampled cases broke the property and keeps the worst
slack. Slack is positive when the property holds, in whatever units suit the
check (a tolerance minus an error, or a log ratio). ``adversarial=True`` swaps
in a deliberately broken ingredient so that the suite can show it does fail.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from .constants import ConstantsReport, pipeline
from .covariance import (check_derivative_identity, covariance_poly, eigen_bounds,
                         invert_C, split_residual, unit_covariance)
from .errors import ConfigError
from .fields import CoefficientField, make_field, random_h1_fields
from .geometry import (Box, Cylinder, check_inclusion_i, check_inclusion_ii,
                       sample_cylinder, sample_sphere, unit_ball_measure, unit_ball_volume)
from .group import (BlockStructure, Point, compose, dilate, dilate_spatial,
                    inverse, matrix_E, norm_B)
from .kernels import (KernelParams, apply_LA_direct, apply_LA_to_kernel, bound_lower_core,
                      bound_upper_shell, check_subsolution_H2, gamma0, gamma0_constant,
                      h1_kernel, h2_kernel, kernel_derivatives, kernel_params, log_gamma_sb,
                      log_gamma_translated, relative_point)
from .potentials import RegionE, potential, scaling_check, strip_bound, strip_potential

SEED = 0x5EED
SUITES = ("group", "covariance", "kernels", "bounds", "subsolution", "geometry", "potentials")


@dataclass
class Check:
    name: str
    count: int
    violations: int
    worst_slack: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "count": self.count,
                "violations": self.violations, "worst_slack": float(self.worst_slack),
                **({"detail": self.detail} if self.detail else {})}


@dataclass
class SuiteReport:
    suite: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"suite": self.suite, "passed": self.passed,
                "checks": [c.to_json() for c in self.checks]}


def _tol_check(name, err, tol, **detail) -> Check:
    """``err <= tol`` elementwise; ``tol`` may be an array."""
    err = np.atleast_1d(np.asarray(err, dtype=float))
    slack = np.broadcast_to(tol, err.shape) - err
    bad = ~(slack >= 0)
    return Check(name, int(err.size), int(np.count_nonzero(bad)),
                 float(np.min(slack)) if err.size else np.inf, detail)


def _ineq_check(name, slack, **detail) -> Check:
    slack = np.atleast_1d(np.asarray(slack, dtype=float))
    return Check(name, int(slack.size), int(np.count_nonzero(~(slack >= 0))),
                 float(np.min(slack)) if slack.size else np.inf, detail)


def _rng(seed):
    return np.random.default_rng(SEED if seed is None else seed)


def _random_points(s: BlockStructure, count: int, rng, spread: float = 1.0) -> Point:
    return Point(spread * rng.standard_normal((count, s.N)), spread * rng.standard_normal(count))


def _multiscale_vectors(s: BlockStructure, count: int, rng, lo=-3.0, hi=3.0) -> np.ndarray:
    """Random directions times Euclidean lengths spread over many decades."""
    g = rng.standard_normal((count, s.N))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * 10.0 ** rng.uniform(lo, hi, (count, 1))


def _dist(a: Point, b: Point) -> np.ndarray:
    return np.maximum(np.max(np.abs(a.x - b.x), axis=-1), np.abs(a.t - b.t))


def _mag(*pts: Point) -> np.ndarray:
    return 1 + np.max([np.maximum(np.max(np.abs(p.x), axis=-1), np.abs(p.t)) for p in pts],
                      axis=0)


# -- group ---------------------------------------------------------------------

def _broken_inverse(s: BlockStructure, z: Point) -> Point:
    return Point(-(matrix_E(s, z.t) @ z.x[..., None])[..., 0], -z.t)


def suite_group(s: BlockStructure, samples: int = 10_000, seed=None,
                adversarial: bool = False) -> SuiteReport:
    rng = _rng(seed)
    inv = _broken_inverse if adversarial else inverse
    checks = []
    m = samples
    z, w, v = (_random_points(s, m, rng) for _ in range(3))
    o = Point(np.zeros((m, s.N)), np.zeros(m))
    tol = 1e-12 * _mag(z, w, v) ** (2 * s.n + 1)
    checks.append(_tol_check("associativity", _dist(compose(s, compose(s, z, w), v),
                                                    compose(s, z, compose(s, w, v))), tol))
    checks.append(_tol_check("identity", np.maximum(_dist(compose(s, z, o), z),
                                                    _dist(compose(s, o, z), z)), tol))
    checks.append(_tol_check("inverse", np.maximum(_dist(compose(s, z, inv(s, z)), o),
                                                   _dist(compose(s, inv(s, z), z), o)), tol))

    r = 10.0 ** rng.uniform(-1, 1, m)
    lhs = dilate(s, r, compose(s, z, w))
    rhs = compose(s, dilate(s, r, z), dilate(s, r, w))
    checks.append(_tol_check("automorphism", _dist(lhs, rhs), 1e-12 * _mag(lhs, rhs)))

    sig = rng.uniform(-2, 2, m)
    a = matrix_E(s, r ** 2 * sig)
    d = r[:, None] ** np.asarray(s.degrees, dtype=float)  # diagonal of dilation_matrix(s, r)
    b = d[:, :, None] * matrix_E(s, sig) / d[:, None, :]
    err = np.max(np.abs(a - b), axis=(1, 2)) / np.maximum(1.0, np.max(np.abs(a), axis=(1, 2)))
    checks.append(_tol_check("commutation", err, 1e-12))

    x = _multiscale_vectors(s, samples, rng)
    y = _multiscale_vectors(s, samples, rng)
    lhs, rhs = norm_B(s, x + y), norm_B(s, x) + norm_B(s, y)
    checks.append(_ineq_check("triangle", (rhs - lhs) / rhs + 1e-12))

    sig0, sigbar = s.sigma_bounds
    e = np.linalg.norm(x, axis=1)
    nb = norm_B(s, x)
    p = 1.0 / (2 * s.n + 1)
    lo = sig0 * np.minimum(e, e ** p)
    hi = sigbar * np.maximum(e, e ** p)
    # sigma0 and sigbar come from an optimiser with absolute accuracy 1e-9
    checks.append(_ineq_check("norm_comparison",
                              np.minimum(nb / lo - 1, 1 - nb / hi) + 1e-9))

    t = rng.choice([-1, 1], samples) * 10.0 ** rng.uniform(-3, 2, samples)
    ex = (matrix_E(s, t) @ x[..., None])[..., 0] - x
    bound = s.c_nB * np.maximum(e ** (1 / 3), e ** p) * np.maximum(
        np.abs(t) ** p, np.abs(t) ** (s.n * p))
    lhs = norm_B(s, ex)
    with np.errstate(divide="ignore", invalid="ignore"):
        slack = np.where(bound > 0, 1 - lhs / bound, -lhs) + 1e-12
    checks.append(_ineq_check("exp_minus_identity", slack))

    checks.append(_measure_scaling(s, rng, max(samples * 10, 10_000)))
    return SuiteReport("group", checks)


def _measure_scaling(s: BlockStructure, rng, count: int) -> Check:
    """Monte Carlo volume of ``delta_r(E)`` against ``r^(Q+2) |E|`` for a box ``E``."""
    lo = rng.uniform(-1, 0, s.N)
    hi = lo + rng.uniform(0.5, 1.5, s.N)
    t_lo, t_hi = -rng.uniform(0.5, 1), rng.uniform(0, 0.5)
    vol = np.prod(hi - lo) * (t_hi - t_lo)
    z_out, sig_out = [], []
    for r in (0.5, 2.0):
        # sample the bounding box of delta_r(E) inflated by 1.5 and count hits
        dl, dh = dilate_spatial(s, r, lo), dilate_spatial(s, r, hi)
        c, h = 0.5 * (dl + dh), 0.75 * (dh - dl)
        tc, th = 0.5 * r * r * (t_lo + t_hi), 0.75 * r * r * (t_hi - t_lo)
        xs = rng.uniform(c - h, c + h, (count, s.N))
        ts = rng.uniform(tc - th, tc + th, count)
        back = dilate(s, 1 / r, Point(xs, ts))
        hit = np.all((back.x > lo) & (back.x < hi), axis=1) & (back.t > t_lo) & (back.t < t_hi)
        frac = hit.mean()
        box_vol = np.prod(2 * h) * 2 * th
        est = frac * box_vol
        se = np.sqrt(frac * (1 - frac) / count) * box_vol
        expect = r ** (s.Q + 2) * vol
        z_out.append(abs(est - expect) / max(se, 1e-300))
        sig_out.append(se / expect)
    return _tol_check("measure_scaling", np.array(z_out), 5.0,
                      relative_standard_error=float(max(sig_out)))


# -- covariance ------------------------------------------------------------------

def _covariance_oracle(s: BlockStructure, A0: np.ndarray, t: float) -> np.ndarray:
    """``int_0^t E A0 E^T`` by Gauss-Legendre, exact for the polynomial integrand."""
    x, w = np.polynomial.legendre.leggauss(2 * s.n + 2)
    sig = 0.5 * t * (x + 1)
    E = matrix_E(s, sig)
    return 0.5 * t * np.einsum("k,kij,jl,kml->im", w, E, A0, E)


def suite_covariance(s: BlockStructure, lam: float = 1.0, Lam: float = 1.2,
                     samples: int = 1000, seed=None, adversarial: bool = False) -> SuiteReport:
    rng = _rng(seed)
    checks = []
    cp = unit_covariance(s)
    ts = rng.uniform(0, 4, samples)
    ts[ts == 0] = 4.0
    err = [np.max(np.abs(cp(t) - _covariance_oracle(s, s.I0(), t))) for t in ts[:50]]
    err.append(np.max(np.abs(cp(0.0))))
    checks.append(_tol_check("unit_covariance_oracle", err, 1e-12))
    if s.p == (1, 1):
        b = float(s.blocks[0][0, 0])
        exact = [np.array([[t, -b * t * t / 2], [-b * t * t / 2, b * b * t ** 3 / 3]])
                 for t in ts]
        err = [np.max(np.abs(cp(t) - e)) for t, e in zip(ts, exact)]
        checks.append(_tol_check("prototype_closed_form", err, 1e-12))

    a0 = _random_spd(s.p0, lam, Lam, rng)
    cps = {"I0": cp, "A0": covariance_poly(s, s.embed(a0))}
    for key, c in cps.items():
        checks.append(_tol_check(f"split[{key}]", [split_residual(c, t) for t in ts], 1e-12))
        checks.append(_tol_check(f"derivative_identity[{key}]",
                                 [check_derivative_identity(c, t) for t in ts], 1e-12))
        det1 = c.det1
        rel = [abs(np.linalg.det(c(t)) / (t ** s.Q * det1) - 1) for t in ts[:200]]
        checks.append(_tol_check(f"det_scaling[{key}]", rel, 1e-10))
        prod = []
        for t in ts[:200]:
            if t < 1e-3:
                continue
            ci, _ = invert_C(c, t)
            ct = c(t)
            prod.append(np.max(np.abs(ci @ ct - np.eye(s.N))) / (1e-10 * np.linalg.cond(ct)))
        checks.append(_tol_check(f"inverse[{key}]", prod, 1.0))

    eb = eigen_bounds(s, lam, Lam)
    if adversarial:
        eb = type(eb)(eb.lam1, 0.25 * eb.Lam1, eb.b_B, eb.lam_I, eb.Lam_I)
    tb = rng.uniform(0, eb.b_B, samples)
    tb[tb == 0] = eb.b_B
    slack, singular = [], 0
    for a in (lam * np.eye(s.p0), Lam * np.eye(s.p0), a0):
        c = covariance_poly(s, s.embed(a))
        for t in tb:
            try:
                ev = np.linalg.eigvalsh(invert_C(c, t)[0])
            except np.linalg.LinAlgError:
                # C0(t) itself is beyond double precision this close to t = 0
                singular += 1
                continue
            lo, hi = eb.sandwich(s, t)
            slack.append(min(ev[0] / lo - 1, 1 - ev[-1] / hi) + 1e-12)
    checks.append(_ineq_check("sandwich", slack, lam1=eb.lam1, Lam1=eb.Lam1, b_B=eb.b_B,
                              skipped_singular=singular))
    return SuiteReport("covariance", checks)


def _random_spd(p: int, lam: float, Lam: float, rng) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    ev = rng.uniform(lam, Lam, p)
    ev[0], ev[-1] = lam, Lam
    return (q * ev) @ q.T if p > 1 else np.array([[rng.uniform(lam, Lam)]])


# -- kernels -----------------------------------------------------------------------

def _ld_terms(s: BlockStructure) -> np.ndarray:
    return np.asarray(s._exp_terms, dtype=np.longdouble)


def _log_gamma_ld(kp: KernelParams, zeta_x, zeta_t, x, t):
    """``log Gamma(zeta^-1 o z)`` in extended precision, straight from the definition."""
    s = kp.structure
    P = _ld_terms(s)
    h = t - zeta_t
    ex = sum(np.einsum("ij,...j->...i", P[k], zeta_x) * h[..., None] ** k
             for k in range(s.n + 1))
    y = (x - ex) * h[..., None] ** (-np.asarray(s.degrees, dtype=np.longdouble) / 2)
    inv1 = np.asarray(kp.cp.inv1, dtype=np.longdouble)
    quad = np.einsum("...i,ij,...j->...", y, inv1, y)
    return -np.longdouble(kp.s * s.Q) / 2 * np.log(h) - quad / (4 * np.longdouble(kp.beta))


def fd_derivatives(kp: KernelParams, z: Point, h: float = 1e-5):
    """Central differences of ``Gamma_{s,beta}`` in extended precision: value, grad, hess, dt.

    Steps are ``h`` in the homogeneous scale of the point: ``h t^((2i+1)/2)``
    along the block ``i`` coordinates and ``h t`` in time.
    """
    s = kp.structure
    N = s.N
    x = np.asarray(z.x, dtype=np.longdouble)
    t = np.asarray(z.t, dtype=np.longdouble)
    zx = np.zeros_like(x)
    zt = np.zeros_like(t)
    hh = np.longdouble(h)

    def g(dx, dt=0):
        return np.exp(_log_gamma_ld(kp, zx, zt, x + dx, t + dt))

    hx = hh * t[..., None] ** (np.asarray(s.degrees, dtype=np.longdouble) / 2)
    ht = hh * t
    e = [np.eye(N, dtype=np.longdouble)[i] * hx for i in range(N)]
    val = g(0)
    grad = np.stack([(g(e[i]) - g(-e[i])) / (2 * hx[..., i]) for i in range(N)], axis=-1)
    hess = np.empty(x.shape[:-1] + (N, N), dtype=np.longdouble)
    for i in range(N):
        hess[..., i, i] = (g(e[i]) - 2 * val + g(-e[i])) / hx[..., i] ** 2
        for j in range(i + 1, N):
            v = (g(e[i] + e[j]) - g(e[i] - e[j]) - g(e[j] - e[i]) + g(-e[i] - e[j])) \
                / (4 * hx[..., i] * hx[..., j])
            hess[..., i, j] = hess[..., j, i] = v
    dt = (g(0, ht) - g(0, -ht)) / (2 * ht)
    return (val.astype(float), grad.astype(float), hess.astype(float), dt.astype(float))


def _rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    axes = tuple(range(1, a.ndim))
    scale = np.max(np.abs(b), axis=axes) if axes else np.abs(b)
    diff = np.max(np.abs(a - b), axis=axes) if axes else np.abs(a - b)
    return diff / np.maximum(scale, 1e-300)


def _normalization(s: BlockStructure, t: float) -> float:
    """``int Gamma0(x, t) dx`` over a +-12 standard deviation box."""
    cp = unit_covariance(s)
    sd = np.sqrt(np.diag(cp(t)))
    if s.N == 2:
        def f(x2, x1):
            return float(gamma0(s, cp, Point([x1, x2], t)))
        val, _ = integrate.dblquad(f, -12 * sd[0], 12 * sd[0], -12 * sd[1], 12 * sd[1],
                                   epsabs=1e-11, epsrel=1e-10)
        return float(val)
    xg, wg = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(-1, 1, 17)
    nodes = np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * xg for a, b in zip(edges, edges[1:])])
    weights = np.concatenate([0.5 * (b - a) * wg for a, b in zip(edges, edges[1:])])
    grids = np.meshgrid(*[12 * d * nodes for d in sd], indexing="ij")
    w = np.ones_like(grids[0])
    for i, d in enumerate(sd):
        shape = [1] * s.N
        shape[i] = -1
        w = w * (12 * d * weights).reshape(shape)
    x = np.stack([g.ravel() for g in grids], axis=-1)
    return float(np.sum(w.ravel() * gamma0(s, cp, Point(x, np.full(len(x), t)))))


def _pole_free_points(s: BlockStructure, count: int, rng, tmin=0.05, tmax=2.0) -> Point:
    t = rng.uniform(tmin, tmax, count)
    x = rng.standard_normal((count, s.N)) * np.sqrt(t)[:, None] ** s.degrees
    return Point(x, t)


def suite_kernels(s: BlockStructure, consts: ConstantsReport | None = None,
                  samples: int = 1000, seed=None, adversarial: bool = False) -> SuiteReport:
    rng = _rng(seed)
    checks = []
    cp = unit_covariance(s)

    err = [abs(_normalization(s, t) - 1) for t in (0.1, 0.5, 1.0)]
    checks.append(_tol_check("normalization", err, 1e-6))

    c0 = gamma0_constant(cp)
    c0_ref = (4 * np.pi) ** (-s.N / 2) / np.sqrt(np.linalg.det(_covariance_oracle(s, s.I0(), 1.0)))
    checks.append(_tol_check("gamma0_constant", abs(c0 / c0_ref - 1), 1e-12, c0=c0))

    kps = [kernel_params(s, 1.0, 1.0), kernel_params(s, 1.2, 1.0), kernel_params(s, 1.4, 0.7)]
    # points at the natural scale of the kernel, where its value is representable
    z = _pole_free_points(s, samples, rng, 1e-3, 4.0)
    r = 10.0 ** rng.uniform(-1, 1, samples)
    err = []
    for kp in kps:
        a = log_gamma_sb(kp, dilate(s, r, z))
        b = -kp.s * s.Q * np.log(r) + log_gamma_sb(kp, z)
        err.append(np.abs(np.expm1(a - b)))
    checks.append(_tol_check("homogeneity", np.concatenate(err), 1e-11))

    zeta = _random_points(s, samples, rng)
    z2 = compose(s, zeta, z)
    a = relative_point(s, zeta, z2)
    b = compose(s, inverse(s, zeta), z2)
    checks.append(_tol_check("translation", _dist(a, b), 1e-12 * _mag(zeta, z2) ** (2 * s.n + 1)))

    pts = _pole_free_points(s, samples, rng)
    errs = {"value": [], "grad": [], "hess": [], "dt": []}
    for kp in kps:
        # a slightly wrong spread must be caught by the difference oracle
        kd = kernel_params(s, kp.s, kp.beta * (1 + 1e-4)) if adversarial else kp
        der = kernel_derivatives(kd, pts)
        val, grad, hess, dt = fd_derivatives(kp, pts)
        errs["value"].append(_rel_err(der.value, val))
        errs["grad"].append(_rel_err(der.grad, grad))
        errs["hess"].append(_rel_err(der.hess, hess))
        # dt is compared against the size of the individual terms it is made of
        scale = np.abs(der.value) * (1 / pts.t + np.max(np.abs(grad), axis=-1)
                                     / np.maximum(np.abs(der.value), 1e-300))
        errs["dt"].append(np.abs(der.dt - dt) / np.maximum(np.maximum(np.abs(dt), scale), 1e-300))
    for key, e in errs.items():
        checks.append(_tol_check(f"finite_differences[{key}]", np.concatenate(e), 1e-6))

    # L0 Gamma0 = 0 away from the pole, closed form and by differences
    f0 = make_field(s, "constant", 1.0, 1.0)
    kp0 = kernel_params(s, 1.0, 1.0)
    zeta = _random_points(s, samples, rng)
    eta = _pole_free_points(s, samples, rng)
    zz = compose(s, zeta, eta)
    val, scale = apply_LA_to_kernel(f0, kp0, zeta, zz, return_scale=True)
    direct = apply_LA_direct(f0, kp0, zeta, zz)
    checks.append(_tol_check("L0_gamma0[closed_form]", np.abs(val) / scale, 1e-8))
    checks.append(_tol_check("L0_gamma0[direct]", np.abs(direct) / scale, 1e-8))
    fd = _fd_operator(f0, kp0, zeta, zz)
    checks.append(_tol_check("L0_gamma0[finite_differences]", np.abs(fd) / scale, 1e-6))
    return SuiteReport("kernels", checks)


def _fd_operator(field: CoefficientField, kp: KernelParams, zeta: Point, z: Point,
                 h: float = 1e-5) -> np.ndarray:
    """``tr(A D^2) + <x, B grad> - d/dt`` applied by central differences in ``z``."""
    s = kp.structure
    N = s.N
    zx = np.asarray(zeta.x, dtype=np.longdouble)
    zt = np.asarray(zeta.t, dtype=np.longdouble)
    x = np.asarray(z.x, dtype=np.longdouble)
    t = np.asarray(z.t, dtype=np.longdouble)
    hh = np.longdouble(h)
    w = t - zt
    hx = hh * w[..., None] ** (np.asarray(s.degrees, dtype=np.longdouble) / 2)
    ht = hh * w

    def g(dx, dt=0):
        return np.exp(_log_gamma_ld(kp, zx, zt, x + dx, t + dt))

    A = field.full(z.x, z.t)
    val = g(0)
    out = np.zeros(x.shape[:-1], dtype=np.longdouble)
    unit = np.eye(N, dtype=np.longdouble)
    grads = []
    for i in range(N):
        ei = unit[i] * hx
        grads.append((g(ei) - g(-ei)) / (2 * hx[..., i]))
    for i in range(s.p0):
        ei = unit[i] * hx
        out += A[..., i, i] * (g(ei) - 2 * val + g(-ei)) / hx[..., i] ** 2
        for j in range(i + 1, s.p0):
            ej = unit[j] * hx
            mixed = (g(ei + ej) - g(ei - ej) - g(ej - ei) + g(-ei - ej)) \
                / (4 * hx[..., i] * hx[..., j])
            out += 2 * A[..., i, j] * mixed
    grad = np.stack(grads, axis=-1)
    Bl = np.asarray(s.B, dtype=np.longdouble)
    out += np.einsum("...i,ij,...j->...", x, Bl, grad)
    out -= (g(0, ht) - g(0, -ht)) / (2 * ht)
    return out.astype(float)


# -- kernel bounds ------------------------------------------------------------------

def _q3_sample(s, consts, r, count, rng) -> Point:
    b = consts.b_B
    c = Cylinder(Point.origin(s.N), consts.sigma0 * r, -b * r * r, -0.5 * b * r * r)
    zeta = sample_cylinder(s, c, count, rng)
    # keep strictly inside after rounding
    return Point(dilate_spatial(s, 1 - 1e-12, zeta.x), zeta.t)


def suite_bounds(s: BlockStructure, consts: ConstantsReport, samples: int = 10_000,
                 seed=None, adversarial: bool = False, radii=(1.0, 0.5)) -> SuiteReport:
    """Both pointwise kernel bounds at sampled admissible pairs, with pipeline constants."""
    rng = _rng(seed)
    kp = kernel_params(s, consts.s, consts.beta,
                       None if consts.hypothesis == "H1" else consts.Lam * s.I0())
    b = consts.b_B
    checks = []
    shells = sorted({float(consts.K1), float(consts.K)})
    if adversarial:
        # a shell well inside the admissible range and no exponential factor
        # in the lower bound: both inequalities must break somewhere
        consts = replace(consts, c2=0.0)
        shells = [0.05 * float(consts.K1)]
    for r in radii:
        for K in shells:
            z = Point(sample_sphere(s, K * r, samples, rng), rng.uniform(-b * r * r, 0, samples))
            zeta = _q3_sample(s, consts, r, samples, rng)
            res = bound_upper_shell(kp, r, K, z, zeta, consts)
            slack = np.where(np.isneginf(res.log_lhs), np.inf, res.slack)
            checks.append(_ineq_check(f"upper[r={r:g},K={K:.6g}]", slack))
        t = rng.uniform(-0.25 * b * r * r, 0, samples)
        t[t == -0.25 * b * r * r] *= 1 - 1e-12
        x = dilate_spatial(s, consts.sigma0 * r * (1 - 1e-12),
                           sample_cylinder(s, Cylinder(Point.origin(s.N), 1.0, 0, 1),
                                           samples, rng).x)
        z = Point(x, t)
        zeta = _q3_sample(s, consts, r, samples, rng)
        res = bound_lower_core(kp, r, z, zeta, consts)
        checks.append(_ineq_check(f"lower[r={r:g}]", res.slack))
    return SuiteReport("bounds", checks)


# -- subsolution signs ------------------------------------------------------------

def _sign_samples(field, kp, count, rng, box_half=2.0):
    s = kp.structure
    z = Point(rng.uniform(-box_half, box_half, (count, s.N)), rng.uniform(-1, 1, count))
    from .kernels import _sample_offsets
    eta = _sample_offsets(s, rng, count)
    zeta = compose(s, z, inverse(s, eta))
    return apply_LA_to_kernel(field, kp, zeta, z, return_scale=True)


def suite_subsolution(s: BlockStructure, lam: float = 1.0, Lam: float = 1.2,
                      samples: int = 10_000, fields: int = 20, seed=None,
                      adversarial: bool = False, s0: float | None = None) -> SuiteReport:
    rng = _rng(seed)
    checks = []
    if adversarial:
        # ratio 2 breaks the eigenvalue condition; take the largest integrable exponent
        fl = [make_field(s, "checkerboard", 1.0, 2.0, {"cell": 0.3}, seed=k) for k in range(fields)]
        kp = kernel_params(s, 1 + 2 / s.Q - 1e-3, 1.0)
    else:
        fl = random_h1_fields(s, lam, Lam, fields, SEED if seed is None else seed)
        kp = h1_kernel(s, lam, Lam)
    worst, bad, total = np.inf, 0, 0
    for f in fl:
        val, scale = _sign_samples(f, kp, samples, rng)
        # where the kernel underflows every term vanishes and the sign holds trivially
        rel = np.divide(val, scale, out=np.zeros_like(val), where=scale > 0) + 1e-12
        worst = min(worst, float(rel.min()))
        bad += int(np.count_nonzero(rel < 0))
        total += rel.size
    checks.append(Check("h1_sign", total, bad, worst, {"s": kp.s, "beta": kp.beta}))

    s0 = 1.0 / s.Q if s0 is None else s0
    k = rng.uniform(-1, 1, s.N)
    f = make_field(s, "smooth-oscillatory", lam, Lam, {"k": k, "omega_t": 0.5}, seed=SEED)
    bound = s0 * f.lam / (2 + s0)
    eps0 = f.eps0(bound)
    z0 = Point(rng.uniform(-1, 1, s.N), 0.0)
    kp2 = h2_kernel(s, f.full(z0.x, z0.t), s0)
    rep = check_subsolution_H2(f, kp2, z0, eps0, samples=samples, rng=rng)
    checks.append(Check("h2_sign", rep["samples"], rep["negative"], rep["min_relative"] + 1e-12,
                        {k: rep[k] for k in ("eps0", "modulus_at_eps0", "modulus_bound",
                                             "M1_min_eig", "M2_min_eig")}))
    return SuiteReport("subsolution", checks)


# -- geometry ---------------------------------------------------------------------

def suite_geometry(s: BlockStructure, consts: ConstantsReport, samples: int = 100_000,
                   seed=None, adversarial: bool = False) -> SuiteReport:
    rng = _rng(seed)
    inflate = 10.0 if adversarial else 1.0
    checks = []
    for d1, d2 in ((0.0, 0.5), (0.1, 0.3), (0.25, 0.26)):
        v = check_inclusion_i(s, consts, 1.0, d1, d2, samples, rng, inflate)
        checks.append(Check(f"inclusion_i[{d1:g},{d2:g}]", samples, v, -float(v)))
    for d1, d2 in ((0.0, 1.0), (0.2, 0.6), (0.5, 0.51)):
        v = check_inclusion_ii(s, consts, 1.0, d1, d2, samples, rng, inflate)
        checks.append(Check(f"inclusion_ii[{d1:g},{d2:g}]", samples, v, -float(v)))
    mc, se = unit_ball_measure(s, with_error=True)
    exact = unit_ball_volume(s)
    checks.append(_tol_check("unit_ball_measure", abs(mc - exact), max(0.01 * exact, 5 * se),
                             monte_carlo=mc, standard_error=se, closed_form=exact))
    return SuiteReport("geometry", checks)


# -- potentials -------------------------------------------------------------------

def _midpoint(a, b, n):
    h = (b - a) / n
    return a + h * (np.arange(n) + 0.5), h


def riemann_box(kp: KernelParams, box: Box, z: Point, n: int) -> float:
    """Midpoint sum of ``int_box Gamma(zeta^-1 o z) dzeta`` with ``n`` cells per axis."""
    s = kp.structure
    axes = [_midpoint(a, b, n) for a, b in zip(box.lo, box.hi)]
    taus, ht = _midpoint(box.t_lo, box.t_hi, n)
    grid = np.stack(np.meshgrid(*[a for a, _ in axes], indexing="ij"), axis=-1).reshape(-1, s.N)
    cell = np.prod([h for _, h in axes]) * ht
    total = 0.0
    for tau in taus:
        zeta = Point(grid, np.full(len(grid), tau))
        total += float(np.sum(np.exp(log_gamma_translated(kp, zeta, z))))
    return total * cell


def riemann_ball(kp: KernelParams, c: Cylinder, z: Point, n: int) -> float:
    """Midpoint sum over a centred cylinder for ``p = [1, 1]``.

    The homogeneous ball ``|x1| + |x2|^(1/3) < r`` is mapped onto a square by
    ``x2 = (r - |x1|)^3 u`` so that the sum sees a smooth integrand.
    """
    s = kp.structure
    if s.p != (1, 1):
        raise ConfigError("the mapped ball sum is written for p = [1, 1]")
    x1, h1 = _midpoint(-c.r, c.r, 2 * n)
    u, hu = _midpoint(-1.0, 1.0, n)
    taus, ht = _midpoint(c.t1, c.t2, n)
    half = (c.r - np.abs(x1)) ** 3
    X1, U = np.meshgrid(x1, u, indexing="ij")
    H = np.meshgrid(half, u, indexing="ij")[0]
    xi = np.stack([X1.ravel(), (H * U).ravel()], axis=-1)
    jac = H.ravel()
    total = 0.0
    for tau in taus:
        zeta = compose(s, c.center, Point(xi, np.full(len(xi), tau)))
        total += float(np.sum(jac * np.exp(log_gamma_translated(kp, zeta, z))))
    return total * h1 * hu * ht


def _richardson(f, n):
    a, b = f(n), f(2 * n)
    return (4 * b - a) / 3, abs(b - a) / 3


def suite_potentials(s: BlockStructure, consts: ConstantsReport | None = None,
                     samples: int = 1000, seed=None, adversarial: bool = False,
                     lam: float = 1.0, Lam: float = 1.2) -> SuiteReport:
    rng = _rng(seed)
    kp = h1_kernel(s, lam, Lam)
    checks = []
    o = Point.origin(s.N)
    errs, detail = [], {}
    if s.p == (1, 1):
        c = Cylinder(o, 1.0, -1.0, 0.0)
        E = RegionE.from_cylinder(s, c)
        for zz in (Point([0.0, 0.0], 0.5), Point([0.4, -0.1], 0.2)):
            ref, _ = _richardson(lambda n: riemann_ball(kp, c, zz, n), 120)
            got = potential(kp, E, zz)
            errs.append(abs(got / ref - 1))
            detail[f"ball{zz.x.tolist() + [float(zz.t)]}"] = [got, ref]
    box = Box(-np.ones(s.N), np.ones(s.N), -1.0, 0.0)
    zz = Point(0.1 * np.arange(1, s.N + 1), 0.3)
    n = 120 if s.N <= 2 else 48
    ref, _ = _richardson(lambda m: riemann_box(kp, box, zz, m), n)
    got = potential(kp, RegionE.from_box(box), zz)
    if adversarial:
        got *= 1 + 1e-3
    errs.append(abs(got / ref - 1))
    detail["box"] = [got, ref]
    checks.append(_tol_check("riemann_oracle", errs, 1e-4, **detail))

    E = RegionE.from_cylinder(s, Cylinder(o, 1.0, -1.0, 0.0))
    err = []
    cases = [(2.0, Point(np.zeros(s.N), 0.5))]
    if s.N <= 2:
        # a point inside the cylinder, where the integrand is singular
        cases.append((0.5, Point(0.3 * np.ones(s.N), -0.2)))
    for r, zz in cases:
        lhs, rhs = scaling_check(kp, E, r, zz, tol=1e-8 if s.N <= 2 else 1e-7)
        err.append(abs(lhs / rhs - 1))
    checks.append(_tol_check("scaling", err, 1e-6))

    # the growth estimate uses the strip of height b_B below the top of the cylinder
    T1, T2 = (-consts.b_B if consts is not None else -1.0), 0.0
    C = strip_bound(kp, T1, T2)
    if consts is not None and consts.hypothesis == "H1":
        checks.append(_tol_check("strip_constant", abs(C / consts.C_strip - 1), 1e-12))
    z = Point(rng.uniform(-3, 3, (samples, s.N)), rng.uniform(T1 - 1, T2 + 1, samples))
    phi = strip_potential(kp, T1, T2, z)
    checks.append(_ineq_check("strip_bound", 1 - phi / C + 1e-12, C_strip=C))
    return SuiteReport("potentials", checks)


# -- dispatch -----------------------------------------------------------------------

def run_suite(name: str, s: BlockStructure, consts: ConstantsReport | None = None,
              lam: float = 1.0, Lam: float = 1.2, samples: int | None = None, seed=None,
              adversarial: bool = False) -> SuiteReport:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
    kw = {"seed": seed, "adversarial": adversarial}
    if samples is not None:
        kw["samples"] = int(samples)
    if name in ("bounds", "geometry") and consts is None:
        consts = pipeline(s, "H1", lam, Lam)
    if name == "group":
        return suite_group(s, **kw)
    if name == "covariance":
        return suite_covariance(s, lam, Lam, **kw)
    if name == "kernels":
        return suite_kernels(s, consts, **kw)
    if name == "bounds":
        return suite_bounds(s, consts, **kw)
    if name == "subsolution":
        return suite_subsolution(s, lam, Lam, **kw)
    if name == "geometry":
        return suite_geometry(s, consts, **kw)
    return suite_potentials(s, consts, lam=lam, Lam=Lam, **kw)
