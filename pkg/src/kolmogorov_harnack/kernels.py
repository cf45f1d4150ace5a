"""Gaussian kernels built on ``C0(t)``: values, derivatives, and the operator applied to them.

Values are computed as logarithms first. ``Gamma_{s,beta}`` at small scales
over- or underflows long before the bounds being compared stop making sense.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CovariancePoly, covariance_poly
from .errors import ConfigError, HypothesisViolation
from .group import BlockStructure, Point, apply_E, compose, inverse, norm_B


@dataclass(frozen=True, eq=False)
class KernelParams:
    """Homogeneity exponent ``s``, spread divisor ``beta`` and the frozen diffusion."""

    s: float
    beta: float
    cp: CovariancePoly

    @property
    def structure(self) -> BlockStructure:
        return self.cp.structure

    @property
    def A0(self) -> np.ndarray:
        return self.cp.A0

    @property
    def integrable(self) -> bool:
        return self.s < 1 + 2 / self.structure.Q


def kernel_params(s: BlockStructure, s_exp: float, beta: float, A0=None) -> KernelParams:
    if not (s_exp > 0 and beta > 0):
        raise ConfigError("kernel exponent and spread must be positive")
    return KernelParams(float(s_exp), float(beta), covariance_poly(s, A0))


@dataclass(frozen=True)
class KernelDerivatives:
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    dt: np.ndarray


def _scaled(s: BlockStructure, x, t):
    """``D_{1/sqrt t} x`` for ``t > 0``."""
    return x * t[..., None] ** (-0.5 * s.degrees)


def _quad(m, y):
    return np.einsum("...i,ij,...j->...", y, m, y)


def log_gamma_sb(kp: KernelParams, z: Point) -> np.ndarray:
    """``log Gamma_{s,beta}(z)``; ``-inf`` where ``t <= 0``."""
    s = kp.structure
    t = z.t
    pos = t > 0
    tt = np.where(pos, t, 1.0)
    y = _scaled(s, z.x, tt)
    val = -0.5 * kp.s * s.Q * np.log(tt) - _quad(kp.cp.inv1, y) / (4 * kp.beta)
    return np.where(pos, val, -np.inf)


def gamma_sb(kp: KernelParams, z: Point) -> np.ndarray:
    return np.exp(log_gamma_sb(kp, z))


def log_gamma0(cp: CovariancePoly, z: Point) -> np.ndarray:
    s = cp.structure
    logc0 = -0.5 * s.N * np.log(4 * np.pi) - 0.5 * np.log(cp.det1)
    kp = KernelParams(1.0, 1.0, cp)
    return logc0 + log_gamma_sb(kp, z)


def gamma0(s: BlockStructure, A0, z: Point) -> np.ndarray:
    """Fundamental solution of the constant-coefficient operator, pole at the origin."""
    cp = A0 if isinstance(A0, CovariancePoly) else covariance_poly(s, A0)
    return np.exp(log_gamma0(cp, z))


def gamma0_constant(cp: CovariancePoly) -> float:
    return float((4 * np.pi) ** (-cp.structure.N / 2) / np.sqrt(cp.det1))


def relative_point(s: BlockStructure, zeta: Point, z: Point) -> Point:
    """``zeta^-1 o z = (x - E(t - tau) xi, t - tau)``."""
    h = z.t - zeta.t
    return Point(z.x - apply_E(s, h, zeta.x), h)


def log_gamma_translated(kp: KernelParams, zeta: Point, z: Point) -> np.ndarray:
    return log_gamma_sb(kp, relative_point(kp.structure, zeta, z))


def gamma_translated(kp: KernelParams, zeta: Point, z: Point) -> np.ndarray:
    return np.exp(log_gamma_translated(kp, zeta, z))


def _inv_C(kp: KernelParams, t):
    d = t[..., None] ** (-0.5 * kp.structure.degrees)
    return d[..., :, None] * kp.cp.inv1 * d[..., None, :]


def kernel_derivatives(kp: KernelParams, z: Point) -> KernelDerivatives:
    """Closed-form gradient, Hessian and time derivative for ``t > 0``."""
    if np.any(z.t <= 0):
        raise ValueError("kernel derivatives need t > 0")
    val = gamma_sb(kp, z)
    ci = _inv_C(kp, z.t)
    y = np.einsum("...ij,...j->...i", ci, z.x)
    b = kp.beta
    grad = -(val / (2 * b))[..., None] * y
    hess = (val / (2 * b))[..., None, None] * (
        -ci + np.einsum("...i,...j->...ij", y, y) / (2 * b))
    cdot = kp.cp.derivative(z.t)
    tr = np.einsum("ij,...ji->...", kp.A0, ci)
    dt = val / (2 * b) * (-kp.s * b * tr + 0.5 * np.einsum("...i,...ij,...j->...", y, cdot, y))
    return KernelDerivatives(val, grad, hess, dt)


def _field_matrix(field, z: Point) -> np.ndarray:
    return field.full(z.x, z.t)


def apply_LA_to_kernel(field, kp: KernelParams, zeta: Point, z: Point, return_scale=False):
    """Closed form of ``L_A Gamma_{s,beta}(zeta^-1 o z)``.

    The combination is evaluated through ``M2 = s beta A0 - A`` and
    ``M1 = A / beta - A0`` so that exact cancellations stay exact. With
    ``return_scale`` the sum of the magnitudes of the individual terms is
    returned too; it is the natural yardstick for rounding.
    """
    w = relative_point(kp.structure, zeta, z)
    if np.any(w.t <= 0):
        raise ValueError("L_A Gamma is only defined for t > tau")
    A = _field_matrix(field, z)
    b, s = kp.beta, kp.s
    val = gamma_sb(kp, w)
    ci = _inv_C(kp, w.t)
    y = np.einsum("...ij,...j->...i", ci, w.x)
    m2 = s * b * kp.A0 - A
    m1 = A / b - kp.A0
    tr_m2 = np.einsum("...ij,...ji->...", m2, ci)
    q_m1 = np.einsum("...i,...ij,...j->...", y, m1, y)
    out = val / (2 * b) * (tr_m2 + 0.5 * q_m1)
    if not return_scale:
        return out
    tr_a0 = np.einsum("ij,...ji->...", kp.A0, ci)
    tr_a = np.einsum("...ij,...ji->...", A, ci)
    q_a = np.einsum("...i,...ij,...j->...", y, A, y)
    q_a0 = np.einsum("...i,ij,...j->...", y, kp.A0, y)
    scale = val / (2 * b) * (s * b * tr_a0 + tr_a + 0.5 * (q_a / b + q_a0))
    return out, scale


def apply_LA_direct(field, kp: KernelParams, zeta: Point, z: Point) -> np.ndarray:
    """``tr(A D^2) + <x, B grad> - d/dt`` assembled from the derivatives, in ``z``."""
    s = kp.structure
    w = relative_point(s, zeta, z)
    der = kernel_derivatives(kp, w)
    A = _field_matrix(field, z)
    # the time derivative of x - E(t - tau) xi is B^T E(t - tau) xi
    shift = apply_E(s, w.t, zeta.x) @ s.B
    dtz = der.dt + np.einsum("...i,...i->...", der.grad, shift)
    drift = np.einsum("...i,ij,...j->...", z.x, s.B, der.grad)
    return np.einsum("...ij,...ji->...", A, der.hess) + drift - dtz


def h1_kernel(s: BlockStructure, lam: float, Lam: float) -> KernelParams:
    """``beta = lambda``, ``s = Lambda / lambda`` with ``A0 = I0``."""
    return kernel_params(s, Lam / lam, lam)


def h2_kernel(s: BlockStructure, A0, s0: float | None = None) -> KernelParams:
    """``s = 1 + s0``, ``beta = 2 / (2 + s0)``, ``A0`` frozen at the base point."""
    s0 = 1.0 / s.Q if s0 is None else float(s0)
    if not 0 < s0 < 2 / s.Q:
        raise ConfigError(f"s0 must lie in (0, 2/Q), got {s0}")
    return kernel_params(s, 1 + s0, 2 / (2 + s0), A0)


def _sample_offsets(s: BlockStructure, rng, count: int) -> Point:
    """Relative points ``eta`` with positive time over many scales."""
    h = 10.0 ** rng.uniform(-3, 0, count)
    u = rng.standard_normal((count, s.N)) * rng.uniform(0, 3, (count, 1))
    return Point(u * h[:, None] ** (0.5 * s.degrees), h)


def check_subsolution_H2(field, kp: KernelParams, z0: Point, eps0: float,
                         samples: int = 10_000, rng=None, tol: float = 1e-12) -> dict:
    """Sample ``L_A Gamma`` around ``z0`` for the frozen-coefficient kernel."""
    from .geometry import Cylinder, sample_cylinder

    s = kp.structure
    rng = np.random.default_rng(0x5EED) if rng is None else rng
    s0 = kp.s - 1
    if not 0 < s0 < 2 / s.Q or not np.isclose(kp.beta, 2 / (2 + s0), rtol=1e-14):
        raise ConfigError("kernel parameters are not the frozen-coefficient choice")
    if not 0 < eps0 <= 1:
        raise ConfigError("eps0 must lie in (0, 1]")
    if field.modulus is None:
        raise HypothesisViolation("field has no modulus of continuity")
    a_z0 = field.full(z0.x, z0.t)
    if not np.allclose(a_z0, kp.A0, rtol=1e-12, atol=1e-14):
        raise ConfigError("kernel A0 does not match the field at z0")
    bound = s0 / (2 + s0) * field.lam
    omega = float(field.modulus(eps0))
    if omega > bound * (1 + 1e-12):
        raise HypothesisViolation(
            f"modulus at eps0={eps0:g} is {omega:.6g} > {bound:.6g}")
    cyl = Cylinder(z0, eps0, -eps0 ** 2, eps0 ** 2)
    z = sample_cylinder(s, cyl, samples, rng)
    eta = _sample_offsets(s, rng, samples)
    zeta = compose(s, z, inverse(s, eta))
    val, scale = apply_LA_to_kernel(field, kp, zeta, z, return_scale=True)
    A = field.matrix(z.x, z.t)
    a0 = kp.A0[: s.p0, : s.p0]
    m1 = A / kp.beta - a0
    m2 = kp.s * kp.beta * a0 - A
    rel = val / scale
    return {
        "samples": int(samples),
        "eps0": float(eps0),
        "modulus_at_eps0": omega,
        "modulus_bound": float(bound),
        "min_value": float(val.min()),
        "min_relative": float(rel.min()),
        "negative": int(np.sum(rel < -tol)),
        "M1_min_eig": float(np.linalg.eigvalsh(m1).min()),
        "M2_min_eig": float(np.linalg.eigvalsh(m2).min()),
        "passed": bool(np.all(rel >= -tol)),
    }


@dataclass(frozen=True)
class BoundSample:
    """Logarithms of both sides of a pointwise kernel bound; ``slack >= 0`` where it holds."""

    log_lhs: np.ndarray
    log_rhs: np.ndarray
    upper: bool = True

    @property
    def slack(self) -> np.ndarray:
        d = self.log_rhs - self.log_lhs
        return d if self.upper else -d


def _check_q3(s, zeta: Point, r, consts):
    nb = norm_B(s, zeta.x)
    b = consts.b_B
    ok = (nb < consts.sigma0 * r) & (zeta.t > -b * r * r) & (zeta.t < -0.5 * b * r * r)
    if not np.all(ok):
        raise ValueError("zeta outside the cylinder Q3_r")


def bound_upper_shell(kp: KernelParams, r: float, K: float, z: Point, zeta: Point,
                      consts, rtol: float = 1e-9) -> BoundSample:
    """Kernel on the lateral shell of ``Q1_r`` against ``(b r^2)^(-sQ/2) exp(-c1 K^2 / b)``."""
    s = kp.structure
    b = consts.b_B
    on_shell = np.abs(norm_B(s, z.x) - K * r) <= rtol * K * r
    in_time = (z.t >= -b * r * r) & (z.t <= 0)
    if not np.all(on_shell & in_time):
        raise ValueError("z outside the lateral shell S1_r")
    _check_q3(s, zeta, r, consts)
    lhs = log_gamma_translated(kp, zeta, z)
    rhs = -0.5 * kp.s * s.Q * np.log(b * r * r) - consts.c1 * K * K / b
    return BoundSample(lhs, np.broadcast_to(rhs, np.shape(lhs)))


def bound_lower_core(kp: KernelParams, r: float, z: Point, zeta: Point,
                     consts) -> BoundSample:
    """Kernel on ``Q2_r x Q3_r`` against ``(b r^2)^(-sQ/2) exp(-c2 / b^(2n+1))``."""
    s = kp.structure
    b = consts.b_B
    ok = (norm_B(s, z.x) < consts.sigma0 * r) & (z.t > -0.25 * b * r * r) & (z.t < 0)
    if not np.all(ok):
        raise ValueError("z outside the cylinder Q2_r")
    _check_q3(s, zeta, r, consts)
    lhs = log_gamma_translated(kp, zeta, z)
    rhs = -0.5 * kp.s * s.Q * np.log(b * r * r) - consts.c2 / b ** (2 * s.n + 1)
    return BoundSample(lhs, np.broadcast_to(rhs, np.shape(lhs)), upper=False)
