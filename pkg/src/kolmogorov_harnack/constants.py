"""The chain of structural constants, from the norm comparisons to the Harnack constant.

Everything downstream of the exponents ``mu`` is computed with ``mpmath``:
for the prototype ``mu_lower`` is of order ``1e6``, so ``exp(-mu)``, ``eta``,
``delta`` and the Harnack constant are far outside double range.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Optional

import mpmath
import numpy as np

from .covariance import compute_b_B, eigen_bounds, sigma_star
from .errors import ConfigError, HypothesisViolation, VerificationFailure
from .geometry import inclusion_constants, unit_ball_volume
from .group import BlockStructure
from .kernels import kernel_params
from .potentials import strip_bound

DPS = 60
K_MARGIN = 1e-6
THRESHOLD_FLAG = 1e-3


@dataclass(frozen=True)
class KernelChoice:
    s: float
    beta: float
    s0: Optional[float] = None


def kernel_choice(hypothesis: str, lam: float, Lam: float, Q: int) -> KernelChoice:
    if not (0 < lam <= Lam):
        raise ConfigError(f"need 0 < lambda <= Lambda, got {lam}, {Lam}")
    if hypothesis == "H1":
        if not Lam / lam < 1 + 2 / Q:
            raise HypothesisViolation(
                f"hypothesis H1 fails: Lambda/lambda = {Lam / lam:.6g} "
                f">= 1 + 2/Q = {1 + 2 / Q:.6g}")
        return KernelChoice(Lam / lam, lam)
    if hypothesis == "H2":
        s0 = 1.0 / Q
        return KernelChoice(1 + s0, 2 / (2 + s0), s0)
    raise ConfigError(f"unknown hypothesis {hypothesis!r}")


def shell_bound_constants(sigbar: float, b_B: float, Lam1: float, beta: float, s: float,
                          Q: int) -> tuple:
    """``(K1, c1)`` for the upper bound on the lateral shell."""
    K1 = max(8 * sigbar, 2 * sigbar * np.sqrt(b_B * Lam1 * beta * s * Q))
    c1 = 1.0 / (8 * Lam1 * sigbar ** 2 * beta)
    return float(K1), float(c1)


def core_bound_constant(lam1: float, beta: float, n: int) -> float:
    """``c2`` for the lower bound between the two small cylinders."""
    return float(5.0 / (2 * lam1 * beta) * 4.0 ** (2 * n + 1))


def choose_K(c1: float, c2: float, K1: float, b_B: float, n: int) -> float:
    return float((1 + K_MARGIN) * np.sqrt(max(c2 / (c1 * b_B ** (2 * n)), K1 * K1)))


def growth_constants(mu_upper, mu_lower, C_strip: float, b_B: float, s: float, Q: int,
                     Q3_measure: float, K: float, sigma0: float) -> tuple:
    """``(eta_bar, eta, theta, P, alpha)``."""
    with mpmath.workdps(DPS):
        mu_upper, mu_lower = mpmath.mpf(mu_upper), mpmath.mpf(mu_lower)
        if not mu_upper > mu_lower:
            raise VerificationFailure("exponent ordering mu_upper > mu_lower fails")
        gap = -mpmath.expm1(mu_lower - mu_upper)
        denom = mpmath.mpf(C_strip) * mpmath.mpf(b_B) ** (s * Q / 2)
        eta_bar = mpmath.exp(-mu_lower) * gap / denom
        eta = eta_bar * mpmath.mpf(Q3_measure)
        theta = mpmath.mpf(K) / mpmath.mpf(sigma0)
        if theta < 2:
            raise VerificationFailure(f"theta = K/sigma0 = {theta} < 2")
        P = 1 + eta / 4
        alpha = mpmath.log1p(eta / 4) / mpmath.log(theta)
        return eta_bar, eta, theta, P, alpha


def harnack_M(s: BlockStructure):
    with mpmath.workdps(DPS):
        return mpmath.mpf(2) ** (1 + (s.n + mpmath.mpf(1) / 2) * (s.Q + 2))


def measure_to_point_constants(eta, C1: float, base_measure: float, s: BlockStructure, M) -> tuple:
    """``(m, delta)``: ``m`` is the least integer with ``(1 + eta/2)^m > M``."""
    with mpmath.workdps(DPS):
        M = mpmath.mpf(M)
        if not M > 1:
            raise ConfigError("M must exceed 1")
        step = mpmath.log1p(mpmath.mpf(eta) / 2)
        m = mpmath.floor(mpmath.log(M) / step) + 1
        if m < 2 ** 52:
            # exact correction when m is representable
            while m > 1 and (m - 1) * step > mpmath.log(M):
                m -= 1
            while not m * step > mpmath.log(M):
                m += 1
        expo = (s.n + mpmath.mpf(1) / 2) * (s.Q + 2)
        delta = mpmath.mpf(C1) ** (s.Q + 2) * mpmath.mpf(base_measure) / (2 * (2 * m) ** expo)
        return m, delta


def harnack_constant(eta, delta, C2: float, Q3_measure: float, s: BlockStructure) -> tuple:
    """``(eps0_case, C_hat, c_hat, C_harnack)``.

    The factor 2 undoes the normalization ``sup u = 2`` on the lower cylinder.
    """
    with mpmath.workdps(DPS):
        half = s.n + mpmath.mpf(1) / 2
        eps0 = (mpmath.mpf(C2) / 2 ** half) ** (s.Q + 2) * delta
        C_hat = eta * eps0 / mpmath.mpf(Q3_measure)
        c_hat = (eta * mpmath.mpf(C2) ** (s.Q + 2) * delta / mpmath.mpf(Q3_measure)
                 * mpmath.mpf(2) ** (-2 * half * (s.Q + 2)))
        C = 2 * max((1 + C_hat) / C_hat, (1 + c_hat) / c_hat)
        return eps0, C_hat, c_hat, C


def h2_radius(K: float, C1: float, C2: float, n: int, eps0_H2: float) -> float:
    if not 0 < eps0_H2 < 1:
        raise ConfigError(f"eps0 must lie in (0, 1), got {eps0_H2}")
    return float(eps0_H2 / K * min(1.0, 4.0 ** (n + 0.5) / (C1 * C2)))


@dataclass(frozen=True)
class ConstantsReport:
    hypothesis: str
    lam: float
    Lam: float
    sigma0: float
    sigbar: float
    b_B: float
    lam_I: float
    Lam_I: float
    lam1: float
    Lam1: float
    s: float
    beta: float
    c1: float
    c2: float
    K1: float
    K: float
    mu_upper: float
    mu_lower: float
    C_strip: float
    eta_bar: object
    eta: object
    theta: float
    P: object
    alpha: object
    M: object
    m: object
    delta: object
    eps0_case: object
    C_hat: object
    c_hat: object
    C_harnack: object
    C1: float
    C2: float
    s0: Optional[float]
    eps0_H2: Optional[float]
    r0: Optional[float]
    Q3_measure: float
    B1_measure: float
    near_threshold: bool

    def to_json(self) -> dict:
        return {f.name: _encode(getattr(self, f.name)) for f in fields(self)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False)

    def invariants(self, s: BlockStructure) -> dict:
        """Every inequality the chain relies on, re-checked after assembly."""
        with mpmath.workdps(DPS):
            checks = {
                "K_gt_K1": self.K > self.K1,
                "K_sq_gt_ratio": self.K ** 2 > self.c2 / (self.c1 * self.b_B ** (2 * s.n)),
                "K_gt_sigma0": self.K > self.sigma0,
                "mu_upper_gt_mu_lower": self.mu_upper > self.mu_lower,
                "eta_positive": self.eta > 0,
                # P - 1 = eta/4 can sit far below the working precision
                "P_gt_1": self.P > 1 or mpmath.log1p(mpmath.mpf(self.eta) / 4) > 0,
                "alpha_positive": self.alpha > 0,
                "theta_ge_2": self.theta >= 2,
                "delta_positive": self.delta > 0,
                "C_harnack_ge_2": self.C_harnack >= 2,
                "b_B_below_norm_ratio": self.b_B <= (self.sigma0 / self.sigbar) ** 2 * (1 + 1e-15),
                "E_bounded_on_b_B": sigma_star(s) >= self.b_B,
                "all_positive": all(
                    v > 0 for v in (self.sigma0, self.sigbar, self.b_B, self.lam1, self.Lam1,
                                    self.c1, self.c2, self.K1, self.C_strip, self.C1, self.C2,
                                    self.eta_bar, self.eps0_case, self.C_hat, self.c_hat)),
            }
        if self.r0 is not None:
            checks["r0_positive"] = self.r0 > 0
        return {k: bool(v) for k, v in checks.items()}


def _encode(v):
    if isinstance(v, mpmath.mpf):
        f = float(v)
        if np.isfinite(f) and f != 0 and mpmath.almosteq(mpmath.mpf(f), v, rel_eps=1e-15):
            return f
        return mpmath.nstr(v, 17)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def decode(v):
    """Inverse of the JSON encoding: strings become ``mpmath.mpf``."""
    if isinstance(v, str):
        with mpmath.workdps(DPS):
            return mpmath.mpf(v)
    return v


def pipeline(s: BlockStructure, hypothesis: str = "H1", lam: float = 1.0, Lam: float = 1.2,
             eps0_H2: float | None = None, check: bool = True) -> ConstantsReport:
    """Assemble the full report. ``eps0_H2`` comes from the field's modulus of continuity."""
    choice = kernel_choice(hypothesis, lam, Lam, s.Q)
    sig0, sigbar = s.sigma_bounds
    b_B = compute_b_B(s)
    # eigen bounds valid for the kernel diffusion (I0 or A(z0)) and the field alike
    eb = eigen_bounds(s, min(lam, 1.0), max(Lam, 1.0))
    K1, c1 = shell_bound_constants(sigbar, b_B, eb.Lam1, choice.beta, choice.s, s.Q)
    c2 = core_bound_constant(eb.lam1, choice.beta, s.n)
    K = choose_K(c1, c2, K1, b_B, s.n)
    mu_upper = c1 * K * K / b_B
    mu_lower = c2 / b_B ** (2 * s.n + 1)
    A_strip = None if hypothesis == "H1" else Lam * np.eye(s.p0)
    C_strip = strip_bound(kernel_params(s, choice.s, choice.beta, A_strip), -b_B, 0.0)
    B1 = unit_ball_volume(s)
    Q3 = B1 * sig0 ** s.Q * b_B / 2
    eta_bar, eta, theta, P, alpha = growth_constants(
        mu_upper, mu_lower, C_strip, b_B, choice.s, s.Q, Q3, K, sig0)
    C1, C2 = inclusion_constants(s, sig0, sigbar, b_B, K)
    M = harnack_M(s)
    m, delta = measure_to_point_constants(eta, C1, Q3, s, M)
    eps0_case, C_hat, c_hat, C_h = harnack_constant(eta, delta, C2, Q3, s)
    r0 = None
    if hypothesis == "H2" and eps0_H2 is not None:
        r0 = h2_radius(K, C1, C2, s.n, eps0_H2)
    near = hypothesis == "H1" and (1 + 2 / s.Q) - Lam / lam < THRESHOLD_FLAG
    rep = ConstantsReport(
        hypothesis=hypothesis, lam=float(lam), Lam=float(Lam),
        sigma0=float(sig0), sigbar=float(sigbar), b_B=b_B,
        lam_I=eb.lam_I, Lam_I=eb.Lam_I, lam1=eb.lam1, Lam1=eb.Lam1,
        s=choice.s, beta=choice.beta, c1=c1, c2=c2, K1=K1, K=K,
        mu_upper=float(mu_upper), mu_lower=float(mu_lower), C_strip=C_strip,
        eta_bar=eta_bar, eta=eta, theta=float(theta), P=P, alpha=alpha,
        M=M, m=m, delta=delta, eps0_case=eps0_case, C_hat=C_hat, c_hat=c_hat, C_harnack=C_h,
        C1=C1, C2=C2, s0=choice.s0, eps0_H2=None if eps0_H2 is None else float(eps0_H2),
        r0=r0, Q3_measure=float(Q3), B1_measure=B1, near_threshold=bool(near),
    )
    if check:
        bad = [k for k, ok in rep.invariants(s).items() if not ok]
        if bad:
            raise VerificationFailure(f"constant invariants failed: {', '.join(bad)}")
    return rep


def report_fields() -> list:
    return [f.name for f in fields(ConstantsReport)]


__all__ = [
    "ConstantsReport", "KernelChoice", "kernel_choice", "shell_bound_constants",
    "core_bound_constant", "choose_K", "growth_constants", "measure_to_point_constants",
    "harnack_constant", "harnack_M", "h2_radius", "pipeline", "decode", "report_fields",
]
