"""The covariance matrix ``C0(t) = int_0^t E(s) A0 E(s)^T ds`` as an exact polynomial."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .group import BlockStructure, dilation_matrix, matrix_E

COND_LIMIT = 1e14


@dataclass(frozen=True, eq=False)
class CovariancePoly:
    """``C0(t) = sum_k coeffs[k] t^(k+1)`` for a fixed constant diffusion ``A0``."""

    structure: BlockStructure
    coeffs: np.ndarray
    A0: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + self.coeffs.shape[1:])
        for c in self.coeffs[::-1]:
            out = (out + c) * t[..., None, None]
        return out

    def derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + self.coeffs.shape[1:])
        for k in range(len(self.coeffs) - 1, -1, -1):
            out = out * t[..., None, None] + (k + 1) * self.coeffs[k]
        return out

    @property
    def C1(self) -> np.ndarray:
        return self(1.0)

    @property
    def det1(self) -> float:
        return float(np.linalg.det(self.C1))

    @property
    def inv1(self) -> np.ndarray:
        return _sym(np.linalg.inv(self.C1))

    @property
    def chol1(self) -> np.ndarray:
        return np.linalg.cholesky(self.C1)


def _sym(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def full_diffusion(s: BlockStructure, A0) -> np.ndarray:
    """Return the ``N x N`` matrix for ``A0`` given as ``p0 x p0`` or ``N x N``."""
    A0 = np.asarray(A0, dtype=float)
    if A0.shape == (s.p0, s.p0):
        A0 = s.embed(A0)
    if A0.shape != (s.N, s.N):
        raise ConfigError(f"diffusion matrix has shape {A0.shape}")
    mask = np.ones((s.N, s.N), dtype=bool)
    mask[: s.p0, : s.p0] = False
    if np.any(A0[mask] != 0):
        raise ConfigError("diffusion matrix must vanish outside the first block")
    a = A0[: s.p0, : s.p0]
    if not np.allclose(a, a.T, rtol=0, atol=1e-14):
        raise ConfigError("diffusion block is not symmetric")
    if np.linalg.eigvalsh(_sym(a))[0] <= 0:
        raise ConfigError("diffusion block is not positive definite")
    return _sym(A0)


def covariance_poly(s: BlockStructure, A0=None) -> CovariancePoly:
    """Integrate ``E(s) A0 E(s)^T`` term by term."""
    A0 = s.I0() if A0 is None else full_diffusion(s, A0)
    P = s._exp_terms
    deg = 2 * s.n + 1
    coeffs = np.zeros((deg, s.N, s.N))
    for j in range(s.n + 1):
        for k in range(s.n + 1):
            coeffs[j + k] += P[j] @ A0 @ P[k].T
    coeffs /= np.arange(1, deg + 1)[:, None, None]
    coeffs = _sym(coeffs)
    coeffs.setflags(write=False)
    A0.setflags(write=False)
    return CovariancePoly(s, coeffs, A0)


@lru_cache(maxsize=None)
def _unit_covariance(s: BlockStructure) -> CovariancePoly:
    return covariance_poly(s)


def unit_covariance(s: BlockStructure) -> CovariancePoly:
    """``C(t)``, the case ``A0 = I0``."""
    return _unit_covariance(s)


def invert_C(cp: CovariancePoly, t: float):
    """Return ``(C0(t)^-1, det C0(t))`` using ``C0(t) = D C0(1) D``."""
    t = float(t)
    if not t > 0:
        raise ValueError("invert_C needs t > 0")
    s = cp.structure
    c = cp(t)
    cond = np.linalg.cond(c)
    if not cond < COND_LIMIT:
        raise np.linalg.LinAlgError(f"C0({t:g}) is numerically singular (cond {cond:.3g})")
    dinv = np.diag(t ** (-0.5 * s.degrees))
    inv = _sym(dinv @ cp.inv1 @ dinv)
    return inv, t ** s.Q * cp.det1


def check_derivative_identity(cp: CovariancePoly, t: float) -> float:
    """Max-norm of ``C0' - (A0 - B^T C0 - C0 B)``."""
    B = cp.structure.B
    c = cp(t)
    return float(np.max(np.abs(cp.derivative(t) - (cp.A0 - B.T @ c - c @ B))))


def split_residual(cp: CovariancePoly, t: float) -> float:
    """Max-norm of ``C0(t) - D_sqrt(t) C0(1) D_sqrt(t)``."""
    d = dilation_matrix(cp.structure, np.sqrt(t))
    return float(np.max(np.abs(cp(t) - d @ cp.C1 @ d)))


def _E_norm(s: BlockStructure, sigma: float) -> float:
    return max(np.linalg.norm(matrix_E(s, sigma), 2), np.linalg.norm(matrix_E(s, -sigma), 2))


def sigma_star(s: BlockStructure, rtol: float = 1e-9) -> float:
    """Largest ``sigma`` with ``||E(tau)|| <= 2`` for all ``|tau| <= sigma``."""
    hi = 1.0
    while _E_norm(s, hi) <= 2:
        hi *= 2
        if hi > 2.0 ** 60:
            return float("inf")
    lo = 0.0
    while True:
        while hi - lo > rtol * hi:
            mid = 0.5 * (lo + hi)
            if _E_norm(s, mid) <= 2:
                lo = mid
            else:
                hi = mid
        # the norm need not be monotone; make sure nothing crosses earlier
        grid = np.linspace(0, lo, 2001)[1:]
        bad = [g for g in grid if _E_norm(s, g) > 2]
        if not bad:
            return lo
        lo, hi = 0.0, bad[0]


def compute_b_B(s: BlockStructure) -> float:
    sig0, sigbar = s.sigma_bounds
    return float(min((sig0 / sigbar) ** 2, sigma_star(s)))


@dataclass(frozen=True)
class EigenBounds:
    lam1: float
    Lam1: float
    b_B: float
    lam_I: float
    Lam_I: float

    def sandwich(self, s: BlockStructure, t):
        """Lower and upper eigenvalue bounds for ``C0(t)^-1``."""
        t = np.asarray(t, dtype=float)
        return 1.0 / (self.Lam1 * t), 1.0 / (self.lam1 * t ** (2 * s.n + 1))


def eigen_bounds(s: BlockStructure, lam: float, Lam: float) -> EigenBounds:
    if not (lam > 0 and Lam > 0) or lam > Lam:
        raise ConfigError(f"need 0 < lambda <= Lambda, got {lam}, {Lam}")
    ev = np.linalg.eigvalsh(unit_covariance(s).C1)
    sig0, sigbar = s.sigma_bounds
    ratio = sigbar / sig0
    return EigenBounds(
        lam1=float(lam * ev[0] * ratio ** -(4 * s.n + 2)),
        Lam1=float(Lam * ev[-1] * ratio ** 2),
        b_B=compute_b_B(s),
        lam_I=float(ev[0]),
        Lam_I=float(ev[-1]),
    )
