"""Group cylinders, their measures, samplers, and the inclusion constants."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .group import (BlockStructure, Point, compose, dilate_spatial, inverse, norm_B)

MEASURE_SEED = 0x5EED


@dataclass(frozen=True)
class Box:
    """Axis-aligned space-time box."""

    lo: np.ndarray
    hi: np.ndarray
    t_lo: float
    t_hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))

    def contains(self, z: Point) -> np.ndarray:
        return (np.all((z.x >= self.lo) & (z.x <= self.hi), axis=-1)
                & (z.t >= self.t_lo) & (z.t <= self.t_hi))

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo) * (self.t_hi - self.t_lo))


@dataclass(frozen=True)
class Cylinder:
    """``center o (B_r x (t1, t2))``."""

    center: Point
    r: float
    t1: float
    t2: float

    def __post_init__(self):
        if not self.r > 0:
            raise ConfigError("cylinder radius must be positive")
        if not self.t1 < self.t2:
            raise ConfigError("cylinder needs t1 < t2")

    def to_json(self) -> dict:
        return {"center": self.center.to_json(), "r": self.r, "t1": self.t1, "t2": self.t2}

    @classmethod
    def from_json(cls, obj) -> "Cylinder":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(Point.from_json(obj["center"]), float(obj["r"]), float(obj["t1"]),
                   float(obj["t2"]))

    def local(self, s: BlockStructure, z: Point) -> Point:
        """``center^-1 o z``."""
        return compose(s, inverse(s, self.center), z)

    def scaled(self, s: BlockStructure, rho: float) -> "Cylinder":
        """Image under ``delta_rho`` of the centred cylinder, centred at ``delta_rho(center)``."""
        c = Point(dilate_spatial(s, rho, self.center.x), rho * rho * self.center.t)
        return Cylinder(c, self.r * rho, self.t1 * rho * rho, self.t2 * rho * rho)


def membership(s: BlockStructure, c: Cylinder, z: Point) -> np.ndarray:
    w = c.local(s, z)
    return (norm_B(s, w.x) < c.r) & (w.t > c.t1) & (w.t < c.t2)


def in_closure(s: BlockStructure, c: Cylinder, z: Point, tol: float = 0.0) -> np.ndarray:
    w = c.local(s, z)
    return (norm_B(s, w.x) <= c.r + tol) & (w.t >= c.t1 - tol) & (w.t <= c.t2 + tol)


def on_parabolic_boundary(s: BlockStructure, c: Cylinder, z: Point, tol: float = 1e-9):
    w = c.local(s, z)
    nb = norm_B(s, w.x)
    base = (np.abs(w.t - c.t1) <= tol) & (nb <= c.r + tol)
    lateral = (np.abs(nb - c.r) <= tol) & (w.t >= c.t1 - tol) & (w.t <= c.t2 + tol)
    return base | lateral


# -- sampling -----------------------------------------------------------------

def sample_unit_ball(s: BlockStructure, count: int, rng) -> np.ndarray:
    """Uniform points of ``{|x|_B < 1}``.

    With ``u_i = |x^(p_i)|^(1/(2i+1))`` the ball is the simplex ``sum u_i < 1``
    and the Lebesgue measure pulls back to a Dirichlet law with parameters
    ``((2i+1) p_i, ..., 1)``; block directions are uniform on spheres.
    """
    alpha = [(2 * i + 1) * p for i, p in enumerate(s.p)] + [1]
    u = rng.dirichlet(alpha, size=count)[:, :-1]
    out = np.empty((count, s.N))
    for i in range(s.n + 1):
        g = rng.standard_normal((count, s.p[i]))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        a, b = s.offsets[i], s.offsets[i + 1]
        out[:, a:b] = g * (u[:, i] ** (2 * i + 1))[:, None]
    return out


def sample_sphere(s: BlockStructure, radius, count: int, rng) -> np.ndarray:
    """Points with ``|x|_B = radius`` (homogeneous rescaling of ball samples)."""
    x = sample_unit_ball(s, count, rng)
    nb = norm_B(s, x)
    return dilate_spatial(s, np.asarray(radius, dtype=float) / nb, x)


def sample_cylinder(s: BlockStructure, c: Cylinder, count: int, rng) -> Point:
    xi = dilate_spatial(s, c.r, sample_unit_ball(s, count, rng))
    tau = rng.uniform(c.t1, c.t2, count)
    return compose(s, c.center, Point(xi, tau))


def sample_closure(s: BlockStructure, c: Cylinder, count: int, rng, edge: float = 0.5) -> Point:
    """Mix of interior points and points on the full topological boundary."""
    m = int(round(edge * count))
    inner = sample_cylinder(s, c, count - m, rng)
    xi = dilate_spatial(s, c.r, sample_unit_ball(s, m, rng))
    tau = rng.uniform(c.t1, c.t2, m)
    which = rng.integers(0, 3, m)
    sph = sample_sphere(s, c.r, m, rng)
    xi = np.where((which == 0)[:, None], sph, xi)
    tau = np.where(which == 1, c.t1, np.where(which == 2, c.t2, tau))
    edge_pts = compose(s, c.center, Point(xi, tau))
    return Point(np.concatenate([inner.x, edge_pts.x]), np.concatenate([inner.t, edge_pts.t]))


def sample_parabolic_boundary(s: BlockStructure, c: Cylinder, count: int, rng) -> Point:
    """Base and lateral shell, weighted by volume and ``d/dr`` of volume.

    Points sit a relative ``1e-12`` outside the open cylinder so that rounding in
    the group law never moves them inside.
    """
    w_base = c.r ** s.Q
    w_lat = s.Q * c.r ** (s.Q - 1) * (c.t2 - c.t1)
    base = rng.uniform(size=count) < w_base / (w_base + w_lat)
    xi_ball = dilate_spatial(s, c.r, sample_unit_ball(s, count, rng))
    xi_sph = sample_sphere(s, c.r * (1 + 1e-12), count, rng)
    xi = np.where(base[:, None], xi_ball, xi_sph)
    t_base = c.t1 - 1e-12 * max(1.0, abs(c.t1), abs(c.t2), abs(float(c.center.t)))
    tau = np.where(base, t_base, rng.uniform(c.t1, c.t2, count))
    return compose(s, c.center, Point(xi, tau))


def sample_box(box: Box, count: int, rng) -> Point:
    x = rng.uniform(box.lo, box.hi, (count, len(box.lo)))
    return Point(x, rng.uniform(box.t_lo, box.t_hi, count))


# -- measures -----------------------------------------------------------------

@lru_cache(maxsize=None)
def _ball_measure(s: BlockStructure, samples: int, seed: int):
    rng = np.random.default_rng(seed)
    hits, done, chunk = 0, 0, 250_000
    while done < samples:
        m = min(chunk, samples - done)
        x = rng.uniform(-1.0, 1.0, (m, s.N))
        hits += int(np.count_nonzero(norm_B(s, x) < 1.0))
        done += m
    frac = hits / samples
    vol = 2.0 ** s.N
    return vol * frac, vol * np.sqrt(frac * (1 - frac) / samples)


def unit_ball_measure(s: BlockStructure, samples: int = 2_000_000,
                      seed: int = MEASURE_SEED, with_error: bool = False):
    """Monte Carlo estimate of ``|B_1(0)|`` over the box ``[-1, 1]^N``."""
    val, err = _ball_measure(s, int(samples), int(seed))
    return (val, err) if with_error else val


def unit_ball_volume(s: BlockStructure) -> float:
    """Closed form of ``|B_1(0)|``.

    In block polar coordinates ``|x^(i)| = rho_i^(2i+1)`` the ball is the simplex
    ``sum rho_i < 1`` and the integral is a Dirichlet integral.
    """
    from math import gamma, pi

    vol = 1.0 / gamma(s.Q + 1)
    for i, p in enumerate(s.p):
        a = (2 * i + 1) * p
        sphere = 2 * pi ** (p / 2) / gamma(p / 2)
        vol *= sphere * (2 * i + 1) * gamma(a)
    return float(vol)


def cylinder_measure(s: BlockStructure, c: Cylinder) -> float:
    return unit_ball_measure(s) * c.r ** s.Q * (c.t2 - c.t1)


# -- named cylinders ------------------------------------------------------------

@dataclass(frozen=True)
class NamedCylinders:
    Q1: Cylinder
    Q2: Cylinder
    Q3: Cylinder
    Qminus: Cylinder
    Qplus: Cylinder
    shell_radius: float
    shell_times: tuple


def named_cylinders(consts, r: float, z0: Point | None = None, N: int | None = None):
    """Cylinders used by the kernel bounds, the growth estimate and the Harnack inequality."""
    if z0 is None:
        z0 = Point.origin(N if N is not None else consts.N)
    b, sig0, K = consts.b_B, consts.sigma0, consts.K
    r2 = r * r
    return NamedCylinders(
        Q1=Cylinder(z0, K * r, -b * r2, 0.0),
        Q2=Cylinder(z0, sig0 * r, -0.25 * b * r2, 0.0),
        Q3=Cylinder(z0, sig0 * r, -b * r2, -0.5 * b * r2),
        Qminus=Cylinder(z0, 0.5 * sig0 * r, -0.75 * b * r2, -0.5 * b * r2),
        Qplus=Cylinder(z0, 0.5 * sig0 * r, -0.25 * b * r2, 0.0),
        shell_radius=K * r,
        shell_times=(-b * r2, 0.0),
    )


# -- inclusion constants ------------------------------------------------------

def _correction_term(s, sig0, sigbar, b_B, factor):
    """``(1/(sigbar sqrt b)) (factor sig0^((2n+1)/3) / (c sigbar^((2n-2)/3)))^(n+1/2)``."""
    n, c = s.n, s.c_nB
    if c == 0:
        return np.inf
    inner = factor * sig0 ** ((2 * n + 1) / 3) / (c * sigbar ** ((2 * n - 2) / 3))
    return inner ** (n + 0.5) / (sigbar * np.sqrt(b_B))


def inclusion_constants(s: BlockStructure, sigma0: float, sigbar: float, b_B: float,
                        K: float) -> tuple:
    """``(C1, C2)`` such that ``rho <= C R (d2 - d1)^(n+1/2)`` gives the inclusions."""
    edge = 1.0 / (sigbar * np.sqrt(b_B))
    c1 = min(1.0, edge, 1.0 / (2 * K), _correction_term(s, sigma0, sigbar, b_B, 0.5))
    c2 = min(np.sqrt(3) / 4, edge, sigma0 / 8,
             _correction_term(s, sigma0, sigbar, b_B, sigma0 / 8))
    return float(c1), float(c2)


def _inclusion_setup(consts, delta1, delta2, upper):
    if not 0 <= delta1 < delta2 <= upper:
        raise ConfigError(f"need 0 <= delta1 < delta2 <= {upper}, got {delta1}, {delta2}")


def _zeta_sample(s, radius, b, rho, count, rng):
    """Points of ``B_radius x (-b rho^2, 0)``, half of them hugging the boundary."""
    c = Cylinder(Point.origin(s.N), radius, -b * rho * rho, 0.0)
    z = sample_closure(s, c, count, rng)
    # pull boundary points a hair inside the open set
    x = dilate_spatial(s, 1 - 1e-12, z.x)
    t = np.clip(z.t, c.t1 * (1 - 1e-12), c.t2 - 1e-15 * abs(c.t1))
    return Point(x, t)


def check_inclusion_i(s: BlockStructure, consts, R: float, delta1: float, delta2: float,
                      samples: int = 100_000, rng=None, inflate: float = 1.0) -> int:
    """Count failures of ``Q_{K rho}(z0) in Q_{R(1/2+d2)}`` over the inner closure."""
    _inclusion_setup(consts, delta1, delta2, 0.5)
    rng = np.random.default_rng(MEASURE_SEED) if rng is None else rng
    b, K = consts.b_B, consts.K
    rho = inflate * consts.C1 * R * (delta2 - delta1) ** (s.n + 0.5)
    o = Point.origin(s.N)
    inner = Cylinder(o, R * (0.5 + delta1), -b * R * R * (0.5 + delta1), 0.0)
    outer = Cylinder(o, R * (0.5 + delta2), -b * R * R * (0.5 + delta2), 0.0)
    z0 = sample_closure(s, inner, samples, rng)
    zeta = _zeta_sample(s, K * rho, b, rho, samples, rng)
    z = compose(s, z0, zeta)
    return int(np.count_nonzero(~membership(s, outer, z)))


def check_inclusion_ii(s: BlockStructure, consts, R: float, delta1: float, delta2: float,
                       samples: int = 100_000, rng=None, inflate: float = 1.0) -> int:
    """Count failures of ``Q_rho(z0) in outer minus inner`` over the middle parabolic boundary."""
    _inclusion_setup(consts, delta1, delta2, 1.0)
    rng = np.random.default_rng(MEASURE_SEED) if rng is None else rng
    b, sig0 = consts.b_B, consts.sigma0
    rho = inflate * consts.C2 * R * (delta2 - delta1) ** (s.n + 0.5)
    o = Point.origin(s.N)

    def cyl(d):
        return Cylinder(o, R * sig0 / 2 * (1 + d), -b / 4 * R * R * (3 + d * d), -b / 2 * R * R)

    mid = cyl(0.5 * (delta1 + delta2))
    z0 = sample_parabolic_boundary(s, mid, samples, rng)
    zeta = _zeta_sample(s, rho, b, rho, samples, rng)
    z = compose(s, z0, zeta)
    ok = membership(s, cyl(delta2), z) & ~membership(s, cyl(delta1), z)
    return int(np.count_nonzero(~ok))


def covering_box(s: BlockStructure, c: Cylinder, margin: float = 0.0, samples: int = 257) -> Box:
    """Axis-aligned bounding box of a translated cylinder."""
    half = c.r ** s.degrees.astype(float)
    tau = np.linspace(c.t1, c.t2, samples)
    moved = compose(s, c.center, Point(np.zeros((samples, s.N)), tau)).x
    lo = moved.min(axis=0) - half
    hi = moved.max(axis=0) + half
    pad = margin * (hi - lo)
    return Box(lo - pad, hi + pad, c.center.t + c.t1, c.center.t + c.t2)
