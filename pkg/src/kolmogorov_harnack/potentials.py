"""Potentials ``U_E(z) = int_E Gamma_{s,beta}(zeta^-1 o z) dzeta`` and the strip bound.

Quadrature layout. Write ``h = t - tau``. For fixed ``h`` the kernel is a
Gaussian in ``xi`` with mean ``E(-h) x`` and covariance
``D_sqrt(h) S D_sqrt(h)``, ``S = 2 beta E(-1) C0(1) E(-1)^T``, so its
Cholesky factor is ``D_sqrt(h) chol(S)`` for every ``h``. The spatial
integral is taken coordinate by coordinate over the exact region bounds,
with Gauss-Legendre panels placed at multiples of the conditional standard
deviation around the conditional mean. The time integral uses
``h = h_lo + (h_hi - h_lo) v^k`` with ``k = 1/(1 + (1-s)Q/2)``, which turns the
integrable blow-up at ``h = 0`` into a bounded integrand, plus panels graded
geometrically toward ``v = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError
from .geometry import Box, Cylinder
from .group import BlockStructure, Point, compose, dilate, dilate_spatial, inverse, matrix_E
from .kernels import KernelParams

_SIGMAS = np.array([-30.0, -10.0, -5.0, -2.5, -1.0, 0.0, 1.0, 2.5, 5.0, 10.0, 30.0])
_ORDERS = ((6, 4, 1e-6), (8, 8, 1e-8), (10, 16, 1e-10), (12, 32, 1e-12))
_TIME_PANELS = 32
_CHUNK = 4_000_000
_MAX_PANEL_FLOATS = 24_000_000


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class RegionE:
    """A bounded set of space-time, either a cylinder, a box, or a masked box."""

    kind: str
    strip: tuple
    bbox: Optional[Box] = None
    cylinder: Optional[Cylinder] = None
    mask: Optional[Callable] = None

    @classmethod
    def empty(cls) -> "RegionE":
        return cls("empty", (0.0, 0.0))

    @classmethod
    def from_cylinder(cls, s: BlockStructure, c: Cylinder) -> "RegionE":
        from .geometry import covering_box

        box = covering_box(s, c)
        return cls("cylinder", (box.t_lo, box.t_hi), box, c)

    @classmethod
    def from_box(cls, box: Box) -> "RegionE":
        return cls("box", (box.t_lo, box.t_hi), box)

    @classmethod
    def masked(cls, box: Box, indicator: Callable) -> "RegionE":
        """``indicator(Point) -> bool array``; must vanish outside ``box``."""
        return cls("masked", (box.t_lo, box.t_hi), box, mask=indicator)

    def indicator(self, s: BlockStructure, z: Point) -> np.ndarray:
        from .geometry import membership

        if self.kind == "empty":
            return np.zeros(z.t.shape, dtype=bool)
        if self.kind == "cylinder":
            return membership(s, self.cylinder, z)
        inside = self.bbox.contains(z)
        if self.kind == "masked":
            inside &= np.asarray(self.mask(z), dtype=bool)
        return inside

    def dilated(self, s: BlockStructure, r: float) -> "RegionE":
        """Image under ``delta_r``."""
        if self.kind == "empty":
            return self
        if self.kind == "cylinder":
            return RegionE.from_cylinder(s, self.cylinder.scaled(s, r))
        box = Box(dilate_spatial(s, r, self.bbox.lo), dilate_spatial(s, r, self.bbox.hi),
                  r * r * self.bbox.t_lo, r * r * self.bbox.t_hi)
        if self.kind == "box":
            return RegionE.from_box(box)
        mask = self.mask
        return RegionE.masked(box, lambda z: mask(dilate(s, 1.0 / r, z)))

    def unit_scale(self) -> float:
        if self.kind == "cylinder":
            return self.cylinder.r
        if self.kind == "empty":
            return 1.0
        return float(np.sqrt(self.strip[1] - self.strip[0]))


# -- building blocks -------------------------------------------------------------

def _check_integrable(kp: KernelParams):
    if not kp.integrable:
        raise ConfigError(
            f"potentials need s < 1 + 2/Q = {1 + 2 / kp.structure.Q:.6g}, got s = {kp.s:.6g}")


def _gauss01(q: int):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1), 0.5 * w


def _cholesky_S(kp: KernelParams) -> np.ndarray:
    s = kp.structure
    e = matrix_E(s, -1.0)
    S = 2 * kp.beta * e @ kp.cp.C1 @ e.T
    return np.linalg.cholesky(0.5 * (S + S.T))


def _ball_bounds(s: BlockStructure, r: float):
    """Coordinate-wise bounds of ``B_r`` given the preceding coordinates."""
    blocks = [(i, j) for i in range(s.n + 1) for j in range(s.p[i])]

    def bounds(k, prev):
        i, j = blocks[k]
        used = np.zeros(prev.shape[:-1])
        for b in range(i):
            a0, a1 = s.offsets[b], s.offsets[b + 1]
            used = used + np.linalg.norm(prev[..., a0:a1], axis=-1) ** (1.0 / (2 * b + 1))
        rad = np.clip(r - used, 0.0, None) ** (2 * i + 1)
        a0 = s.offsets[i]
        partial = np.sum(prev[..., a0:a0 + j] ** 2, axis=-1)
        half = np.sqrt(np.clip(rad * rad - partial, 0.0, None))
        return -half, half, (0.0,)

    return bounds


def _box_bounds(box: Box):
    def bounds(k, prev):
        shape = prev.shape[:-1]
        return np.full(shape, box.lo[k]), np.full(shape, box.hi[k]), ()

    return bounds


def _normal_mass(alpha, beta):
    """``Phi(beta) - Phi(alpha)`` without cancellation in the upper tail."""
    flip = alpha > 0
    lo = np.where(flip, -beta, alpha)
    hi = np.where(flip, -alpha, beta)
    return np.clip(ndtr(hi) - ndtr(lo), 0.0, None)


def _spatial_integrals(bounds, mu, L, q, pieces, exact_last=True, levels=None):
    """``int_region exp(-|L^-1 (xi - mu)|^2 / 2) dxi`` for a batch of (mu, L).

    Outer coordinates use Gauss-Legendre panels; the innermost one is
    integrated exactly through the normal distribution function when
    ``exact_last`` is set. Returns nodes, standardized coordinates and
    weights; with ``exact_last`` the last coordinate of the nodes is the
    conditional mean and the weights already carry the exact factor.
    """
    H, N = mu.shape
    gx, gw = _gauss01(q)
    ux = np.linspace(0.0, 1.0, pieces + 1)[1:-1]
    xs = np.zeros((H, 1, 0))
    us = np.zeros((H, 1, 0))
    w = np.ones((H, 1))
    for j in range(N if levels is None else levels):
        a, b, extra = bounds(j, xs)
        m = mu[:, j, None] + np.einsum("hk,hpk->hp", L[:, j, :j], us)
        sd = L[:, j, j][:, None]
        if exact_last and j == N - 1:
            mass = _normal_mass((a - m) / sd, (b - m) / sd) * sd * np.sqrt(2 * np.pi)
            xs = np.concatenate([xs, m[..., None]], axis=-1)
            us = np.concatenate([us, np.zeros(m.shape + (1,))], axis=-1)
            return xs, us, w * mass
        pts = [a[..., None], b[..., None],
               np.clip(m[..., None] + sd[..., None] * _SIGMAS, a[..., None], b[..., None]),
               a[..., None] + (b - a)[..., None] * ux]
        for e in extra:
            pts.append(np.clip(np.full(a.shape, e), a, b)[..., None])
        bp = np.sort(np.concatenate(pts, axis=-1), axis=-1)
        ln = np.diff(bp, axis=-1)
        nodes = bp[..., :-1, None] + ln[..., None] * gx
        wts = w[..., None, None] * ln[..., None] * gw
        P = nodes.shape[1] * nodes.shape[2] * q
        u = (nodes - m[..., None, None]) / sd[..., None, None]
        xs = np.concatenate([np.broadcast_to(xs[:, :, None, None, :], nodes.shape + (j,)),
                             nodes[..., None]], axis=-1).reshape(H, P, j + 1)
        us = np.concatenate([np.broadcast_to(us[:, :, None, None, :], u.shape + (j,)),
                             u[..., None]], axis=-1).reshape(H, P, j + 1)
        w = wts.reshape(H, P)
    return xs, us, w


def _cond_moments(mu, L, us, j):
    m = mu[..., j] + np.einsum("...k,...k->...", L[..., j, :j], us)
    return m, L[..., j, j]


def _spatial_mass(bounds, mu, L, q, pieces, rtol, max_rounds=40):
    """Region integral of the Gaussian for each ``h`` without a mask.

    Coordinates before the last two use tensor Gauss-Legendre panels, the
    next-to-last one adaptive panel bisection, the last one the exact normal
    mass. ``rtol`` may be an array with one entry per ``h``. Returns an
    array of shape ``(H,)``.
    """
    H, N = mu.shape
    scale = (2 * np.pi) ** (N / 2) * np.prod(np.diagonal(L, axis1=1, axis2=2), axis=1)
    if N == 1:
        a, b, _ = bounds(0, np.zeros((H, 0)))
        m, sd = mu[:, 0], L[:, 0, 0]
        return _normal_mass((a - m) / sd, (b - m) / sd) * sd * np.sqrt(2 * np.pi)
    xs, us, w = _spatial_integrals(bounds, mu, L, q, pieces, exact_last=False, levels=N - 2)
    P = xs.shape[1]
    owner = np.repeat(np.arange(H * P), 1)
    xs = xs.reshape(H * P, N - 2)
    us = us.reshape(H * P, N - 2)
    # the outer levels carry their share of the Gaussian in the weight
    w = w.reshape(H * P) * np.exp(-0.5 * np.sum(us * us, axis=-1))
    hid = np.repeat(np.arange(H), P)
    muf, Lf = mu[hid], L[hid]
    j = N - 2
    a, b, extra = bounds(j, xs)
    m, sd = _cond_moments(muf, Lf, us, j)
    pts = [a[:, None], b[:, None],
           np.clip(m[:, None] + sd[:, None] * _SIGMAS, a[:, None], b[:, None]),
           a[:, None] + (b - a)[:, None] * np.linspace(0, 1, pieces + 1)[1:-1]]
    for e in extra:
        pts.append(np.clip(np.full(a.shape, e), a, b)[:, None])
    bp = np.sort(np.concatenate(pts, axis=1), axis=1)
    lo, hi = bp[:, :-1].ravel(), bp[:, 1:].ravel()
    own = np.repeat(owner, bp.shape[1] - 1)
    keep = hi > lo
    lo, hi, own = lo[keep], hi[keep], own[keep]
    gx, gw = _gauss01(q)
    rtol = np.broadcast_to(np.asarray(rtol, dtype=float), (H,))
    tol_own = rtol[hid] * scale[hid] / np.maximum(w, 1e-300) if N > 2 else rtol * scale
    span = np.maximum(b - a, 1e-300)

    def integrand(nodes, o):
        prev = xs[o]
        u_prev = us[o]
        mj, sj = m[o], sd[o]
        uj = (nodes - mj[:, None]) / sj[:, None]
        full = np.concatenate([np.broadcast_to(prev[:, None, :], nodes.shape + (N - 2,)),
                               nodes[..., None]], axis=-1)
        uu = np.concatenate([np.broadcast_to(u_prev[:, None, :], nodes.shape + (N - 2,)),
                             uj[..., None]], axis=-1)
        aa, bb, _ = bounds(N - 1, full)
        ml, sl = _cond_moments(muf[o][:, None, :], Lf[o][:, None, :, :], uu, N - 1)
        inner = _normal_mass((aa - ml) / sl, (bb - ml) / sl) * sl * np.sqrt(2 * np.pi)
        return np.exp(-0.5 * uj * uj) * inner

    def rule(l, h, o):
        ln = h - l
        return np.sum(integrand(l[:, None] + ln[:, None] * gx, o) * gw, axis=1) * ln

    out = np.zeros(H * P)
    whole = rule(lo, hi, own)
    for _ in range(max_rounds):
        mid = 0.5 * (lo + hi)
        left, right = rule(lo, mid, own), rule(mid, hi, own)
        err = np.abs(left + right - whole)
        t_own = tol_own[own]
        ok = ((err <= t_own * np.maximum((hi - lo) / span[own], 2.0 ** -12))
              | (err <= 1e-14 * np.abs(whole)) | (hi - lo <= 1e-12 * span[own]))
        np.add.at(out, own[ok], (left + right)[ok])
        bad = ~ok
        if not bad.any():
            break
        if 2 * bad.sum() * q * N > _MAX_PANEL_FLOATS:
            raise QuadratureError("adaptive spatial quadrature exhausted its panel budget")
        lo = np.concatenate([lo[bad], mid[bad]])
        hi = np.concatenate([mid[bad], hi[bad]])
        own = np.concatenate([own[bad], own[bad]])
        whole = np.concatenate([left[bad], right[bad]])
    else:
        raise QuadratureError("adaptive spatial quadrature exhausted its budget")
    return (out * w).reshape(H, P).sum(axis=1)


def _time_rule(h_lo, h_hi, kappa, q, panels=_TIME_PANELS):
    gx, gw = _gauss01(q)
    edges = np.concatenate([[0.0], 2.0 ** -np.arange(panels - 1, -1, -1)])
    ln = np.diff(edges)
    v = (edges[:-1, None] + ln[:, None] * gx).ravel()
    wv = (ln[:, None] * gw).ravel()
    span = h_hi - h_lo
    h = h_lo + span * v ** kappa
    dh = span * kappa * v ** (kappa - 1) * wv
    return h, dh


def _potential_once(kp: KernelParams, E: RegionE, z: Point, q: int, pieces: int,
                    rtol: float = 1e-10) -> float:
    s = kp.structure
    if E.kind == "cylinder":
        c = E.cylinder
        w = compose(s, inverse(s, c.center), z)
        x, t = w.x, float(w.t)
        t1, t2 = c.t1, c.t2
        bounds = _ball_bounds(s, c.r)
    else:
        x, t = z.x, float(z.t)
        t1, t2 = E.strip
        bounds = _box_bounds(E.bbox)
    if t <= t1:
        return 0.0
    h_lo, h_hi = max(0.0, t - t2), t - t1
    expo = (1 - kp.s) * s.Q / 2
    kappa = 1.0 / (1.0 + expo) if h_lo == 0.0 else 1.0
    h, dh = _time_rule(h_lo, h_hi, kappa, q)
    keep = h > 0
    h, dh = h[keep], dh[keep]
    Ls = _cholesky_S(kp)
    # nodes whose Gaussian mass can only contribute a sliver of the total get
    # a proportionally looser spatial tolerance
    reach = dh * h ** (0.5 * (1 - kp.s) * s.Q)
    node_rtol = np.minimum(rtol * reach.max() / np.maximum(reach, 1e-300), 1e-3)
    total = 0.0
    exact = E.kind != "masked"
    levels = max(s.N - 2, 0) if exact else s.N
    panels = len(_SIGMAS) + pieces + 3
    work = (panels * q) ** levels * (panels * q if exact and s.N > 1 else 1)
    per = max(1, int(_CHUNK // work))
    for a in range(0, len(h), per):
        hh, dd = h[a:a + per], dh[a:a + per]
        mu = np.einsum("hij,j->hi", matrix_E(s, -hh), x)
        L = hh[:, None, None] ** (0.5 * s.degrees)[None, :, None] * Ls
        if exact:
            inner = _spatial_mass(bounds, mu, L, q, pieces, node_rtol[a:a + per])
        else:
            xs, us, wts = _spatial_integrals(bounds, mu, L, q, pieces, False)
            tau = (t - hh)[:, None] * np.ones(xs.shape[:2])
            vals = np.exp(-0.5 * np.sum(us * us, axis=-1)) * wts
            inner = (vals * E.indicator(s, Point(xs, tau))).sum(axis=1)
        total += float(np.sum(dd * hh ** (-0.5 * kp.s * s.Q) * inner))
    return total


def potential(kp: KernelParams, E: RegionE, z: Point, tol: float | None = None,
              with_error: bool = False):
    """``U_E(z)`` to an estimated absolute error ``tol``.

    ``tol`` defaults to ``1e-6`` at unit scale, rescaled by ``r^(Q+2-sQ)``.
    """
    _check_integrable(kp)
    s = kp.structure
    if tol is None:
        tol = 1e-6 * E.unit_scale() ** (s.Q + 2 - kp.s * s.Q)
    if not tol > 0:
        raise ConfigError("tolerance must be positive")
    if E.kind == "empty" or float(z.t) <= E.strip[0]:
        return (0.0, 0.0) if with_error else 0.0
    prev = None
    for q, pieces, rtol in _ORDERS:
        val = _potential_once(kp, E, z, q, pieces, rtol)
        if prev is not None:
            err = abs(val - prev)
            if err <= tol:
                return (val, err) if with_error else val
        prev = val
    raise QuadratureError(f"potential did not reach tol={tol:.3g} (last change {err:.3g})")


def gaussian_factor(kp: KernelParams) -> float:
    """``int exp(-<E(1)^T C0(1)^-1 E(1) xi, xi> / (4 beta)) dxi``.

    The value is ``(4 pi beta)^(N/2) sqrt(det C0(1))``.
    """
    N = kp.structure.N
    return float((4 * np.pi * kp.beta) ** (N / 2) * np.sqrt(kp.cp.det1))


def time_factor(kp: KernelParams, length: float) -> float:
    """Supremum over ``t`` of ``int_{T1}^{min(t,T2)} (t - tau)^((1-s)Q/2) dtau``."""
    _check_integrable(kp)
    if kp.s < 1:
        raise ConfigError("the strip integral is unbounded in t when s < 1")
    a = 1 + (1 - kp.s) * kp.structure.Q / 2
    return float(length ** a / a)


def strip_bound(kp: KernelParams, T1: float, T2: float) -> float:
    """Bound ``C`` on ``int_{R^N x [T1, T2]} Gamma_{s,beta}(zeta^-1 o z) dzeta`` over all ``z``."""
    if not T2 > T1:
        raise ConfigError("strip needs T1 < T2")
    return gaussian_factor(kp) * time_factor(kp, T2 - T1)


def strip_potential(kp: KernelParams, T1: float, T2: float, z: Point) -> np.ndarray:
    """The strip integral in closed form: spatial Gaussian integral times a power of ``t - tau``."""
    _check_integrable(kp)
    a = 1 + (1 - kp.s) * kp.structure.Q / 2
    t = np.asarray(z.t, dtype=float)
    hi = np.clip(t - T1, 0, None)
    lo = np.clip(t - T2, 0, None)
    return gaussian_factor(kp) * (hi ** a - lo ** a) / a


def scaling_check(kp: KernelParams, E: RegionE, r: float, z: Point, tol: float | None = None):
    """``(U_{delta_r E}(delta_r z), r^(Q+2-sQ) U_E(z))``."""
    s = kp.structure
    lhs = potential(kp, E.dilated(s, r), dilate(s, r, z),
                    None if tol is None else tol * r ** (s.Q + 2 - kp.s * s.Q))
    rhs = r ** (s.Q + 2 - kp.s * s.Q) * potential(kp, E, z, tol)
    return lhs, rhs
