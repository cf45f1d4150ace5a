"""Explicit monotone finite differences for ``d_t u = tr(A D^2) u + <x, B grad u>``.

Central second differences act on the first block, first-order upwind
differences on the drift. Under the step restriction
``dt (2 Lambda sum_{i<p0} 1/h_i^2 + sum_j max|(B^T x)_j| / h_j) <= 1`` every
update is a convex combination of old values, which gives the discrete
maximum principle the experiments rely on.

The experiments run on a window around the inner cylinders: with ``K`` in
the thousands the full outer cylinder is far too wide to grid.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import mpmath
import numpy as np

from .errors import ConfigError, HypothesisViolation, InfeasibleDiscretization
from .fields import CoefficientField
from .geometry import Box, Cylinder, covering_box, in_closure, membership
from .group import BlockStructure, Point, dilate_spatial, norm_B
from .kernels import gamma0

CFL_SAFETY = 0.9
DEFAULT_RESOLUTION = 64
ALLOWANCE = 0.05
MAX_STEPS = 200_000


# -- grid ------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    lo: np.ndarray
    hi: np.ndarray
    shape: tuple
    t0: float
    t1: float
    dt: float
    nsteps: int

    @property
    def h(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.asarray(self.shape) - 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axes(self) -> list:
        return [np.linspace(a, b, n) for a, b, n in zip(self.lo, self.hi, self.shape)]

    def nodes(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def time(self, k: int) -> float:
        return self.t0 + k * self.dt if k < self.nsteps else self.t1

    def to_json(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "shape": list(self.shape),
                "t0": self.t0, "t1": self.t1, "dt": self.dt, "nsteps": self.nsteps}


def _drift_max(s: BlockStructure, lo, hi) -> np.ndarray:
    """``max |(B^T x)_j|`` over the box; the drift is linear so corners suffice."""
    amax = np.maximum(np.abs(lo), np.abs(hi))
    return np.abs(s.B).T @ amax


def make_grid(s: BlockStructure, box: Box, resolution, Lam: float,
              safety: float = CFL_SAFETY, max_steps: int = MAX_STEPS) -> Grid:
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (s.N,))
    if np.any(res < 3):
        raise InfeasibleDiscretization(
            f"resolution {res.tolist()} leaves no interior node; the stencil cannot fit")
    if not box.t_hi > box.t_lo:
        raise ConfigError("empty time interval")
    h = (box.hi - box.lo) / (res - 1)
    rate = 2 * Lam * np.sum(1.0 / h[: s.p0] ** 2) + np.sum(_drift_max(s, box.lo, box.hi) / h)
    dt_max = safety / rate
    T = box.t_hi - box.t_lo
    nsteps = max(1, int(math.ceil(T / dt_max)))
    if nsteps > max_steps:
        raise InfeasibleDiscretization(
            f"{nsteps} time steps needed at resolution {res.tolist()} (limit {max_steps})")
    return Grid(np.array(box.lo, float), np.array(box.hi, float), tuple(int(r) for r in res),
                float(box.t_lo), float(box.t_hi), T / nsteps, nsteps)


def cfl_number(s: BlockStructure, grid: Grid, Lam: float) -> float:
    h = grid.h
    return float(grid.dt * (2 * Lam * np.sum(1.0 / h[: s.p0] ** 2)
                            + np.sum(_drift_max(s, grid.lo, grid.hi) / h)))


# -- stencils ---------------------------------------------------------------------

def _interior(shape):
    return tuple(slice(1, n - 1) for n in shape)


def _shifted(u, shifts):
    return u[tuple(slice(1 + o, n - 1 + o) for o, n in zip(shifts, u.shape))]


def _unit(N, i, sign=1):
    e = [0] * N
    e[i] = sign
    return e


class _Operator:
    """Precomputed pieces of the explicit update on the interior nodes."""

    def __init__(self, s: BlockStructure, grid: Grid):
        self.s, self.grid = s, grid
        X = grid.nodes()
        self.X_int = X[_interior(grid.shape)]
        self.v = self.X_int @ s.B  # (B^T x)_j = sum_i x_i B_ij
        self.h = grid.h
        boundary = np.ones(grid.shape, dtype=bool)
        boundary[_interior(grid.shape)] = False
        self.boundary = boundary
        self.X = X

    def apply(self, u, A):
        """``tr(A D^2) u + <x, B grad u>`` on the interior."""
        s, h, N = self.s, self.h, self.s.N
        c = _shifted(u, [0] * N)
        out = np.zeros_like(c)
        for i in range(s.p0):
            aii = A[..., i, i]
            second = _shifted(u, _unit(N, i)) - 2 * c + _shifted(u, _unit(N, i, -1))
            out += aii * second / h[i] ** 2
            for j in range(i + 1, s.p0):
                aij = A[..., i, j]
                pos, neg = np.maximum(aij, 0), np.maximum(-aij, 0)
                ei, ej = np.array(_unit(N, i)), np.array(_unit(N, j))
                hh = h[i] * h[j]
                # monotone mixed stencil: diagonal corners for a_ij > 0, antidiagonal otherwise
                pp = _shifted(u, ei + ej) + _shifted(u, -ei - ej)
                pm = _shifted(u, ei - ej) + _shifted(u, -ei + ej)
                axis = (_shifted(u, ei) + _shifted(u, -ei) + _shifted(u, ej) + _shifted(u, -ej))
                # a_ij and a_ji together: 2 a_ij u_ij
                out += (pos * (pp - axis + 2 * c) + neg * (pm - axis + 2 * c)) / hh
        for j in range(N):
            vj = self.v[..., j]
            fwd = (_shifted(u, _unit(N, j)) - c) / h[j]
            bwd = (c - _shifted(u, _unit(N, j, -1))) / h[j]
            out += np.where(vj > 0, vj * fwd, vj * bwd)
        return out

    def monotone(self, A) -> bool:
        """Diagonal dominance needed by the mixed stencil."""
        s, h = self.s, self.h
        for i in range(s.p0):
            off = sum(np.abs(A[..., i, j]) / (h[i] * h[j]) for j in range(s.p0) if j != i)
            if np.any(A[..., i, i] / h[i] ** 2 < off - 1e-14):
                return False
        return True


# -- results ----------------------------------------------------------------------

@dataclass
class RegionStats:
    sup: float = -np.inf
    inf: float = np.inf
    nodes: int = 0
    slabs: int = 0
    count_open: int = 0
    count_nonpositive: int = 0
    sup_positive: float = 0.0

    @property
    def osc(self) -> float:
        return float(self.sup - self.inf) if self.nodes else 0.0

    @property
    def nonpositive_fraction(self) -> float:
        return self.count_nonpositive / self.count_open if self.count_open else 0.0

    def to_json(self) -> dict:
        return {"sup": float(self.sup), "inf": float(self.inf), "osc": self.osc,
                "nodes": self.nodes, "slabs": self.slabs,
                "nonpositive_fraction": self.nonpositive_fraction}


@dataclass
class SolveResult:
    grid: Grid
    u: np.ndarray
    regions: dict
    u_min: float
    u_max: float
    data_min: float
    data_max: float
    monotone: bool
    history: list = dc_field(default_factory=list)

    @property
    def nonnegative(self) -> bool:
        """Discrete maximum principle check for nonnegative data."""
        scale = max(abs(self.data_min), abs(self.data_max), 1e-300)
        return self.data_min >= 0 and self.u_min >= -1e-12 * scale

    def to_json(self) -> dict:
        return {"grid": self.grid.to_json(), "u_min": self.u_min, "u_max": self.u_max,
                "data_min": self.data_min, "data_max": self.data_max,
                "monotone": self.monotone, "nonnegative": self.nonnegative,
                "regions": {k: v.to_json() for k, v in self.regions.items()}}


def write_csv(result: SolveResult, path) -> None:
    """Per-slab sup/inf of every registered region."""
    names = sorted(result.regions)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"{n}_{k}" for n in names for k in ("sup", "inf")])
        for t, row in result.history:
            w.writerow([repr(float(t))] + [repr(float(row.get(n, (np.nan, np.nan))[k]))
                                           for n in names for k in (0, 1)])


# -- the solver -------------------------------------------------------------------

def _domain_box(s: BlockStructure, domain) -> Box:
    if isinstance(domain, Box):
        return domain
    if isinstance(domain, Cylinder):
        return covering_box(s, domain)
    raise ConfigError(f"unsupported domain {type(domain).__name__}")


def _region_masks(s: BlockStructure, grid: Grid, c: Cylinder, X, t):
    pts = Point(X, np.full(X.shape[:-1], t))
    return in_closure(s, c, pts, tol=1e-12), membership(s, c, pts)


def solve(field: CoefficientField, domain, data: Callable, resolution=DEFAULT_RESOLUTION,
          regions: Optional[dict] = None, record_history: bool = False,
          safety: float = CFL_SAFETY, max_steps: int = MAX_STEPS,
          grid: Optional[Grid] = None) -> SolveResult:
    """March the equation across ``domain`` (a Box or a Cylinder's covering box).

    ``data(x, t)`` supplies the initial slab and the lateral boundary values.
    ``regions`` maps names to cylinders whose closure sup/inf are tracked over
    every time slab they contain.
    """
    s = field.structure
    box = _domain_box(s, domain)
    if grid is None:
        grid = make_grid(s, box, resolution, field.Lam, safety, max_steps)
    if cfl_number(s, grid, field.Lam) > 1 + 1e-12:
        raise InfeasibleDiscretization("time step violates the stability restriction")
    op = _Operator(s, grid)
    X = op.X
    regions = dict(regions or {})
    stats = {k: RegionStats() for k in regions}
    static = {}
    for name, c in regions.items():
        # a cylinder centred at a spatial origin has time-independent cross sections
        if np.all(np.asarray(c.center.x) == 0):
            static[name] = _region_masks(s, grid, c, X, float(c.center.t) + 0.5 * (c.t1 + c.t2))

    def observe(u, t):
        row = {}
        for name, c in regions.items():
            lo_t, hi_t = float(c.center.t) + c.t1, float(c.center.t) + c.t2
            tol = 1e-12 * max(1.0, abs(lo_t), abs(hi_t))
            if not (lo_t - tol <= t <= hi_t + tol):
                continue
            closed, opened = static.get(name) or _region_masks(s, grid, c, X, t)
            st = stats[name]
            vals = u[closed]
            if vals.size:
                st.sup = max(st.sup, float(vals.max()))
                st.inf = min(st.inf, float(vals.min()))
                st.sup_positive = max(st.sup_positive, float(vals.max()))
                st.nodes += int(vals.size)
                st.slabs += 1
                row[name] = (float(vals.max()), float(vals.min()))
            if lo_t < t < hi_t:
                inner = u[opened]
                st.count_open += int(inner.size)
                st.count_nonpositive += int(np.count_nonzero(inner <= 0))
        if record_history:
            history.append((t, row))

    history: list = []
    u = np.asarray(data(X, np.full(grid.shape, grid.t0)), dtype=float)
    if u.shape != grid.shape or not np.all(np.isfinite(u)):
        raise ConfigError("initial data must be finite and match the grid")
    d_min, d_max = float(u.min()), float(u.max())
    u_min, u_max = d_min, d_max
    monotone = True
    observe(u, grid.t0)
    Xb = X[op.boundary]
    inner = _interior(grid.shape)
    for k in range(grid.nsteps):
        t = grid.time(k)
        A = field.matrix(op.X_int, np.full(op.X_int.shape[:-1], t))
        if s.p0 > 1 and monotone:
            monotone = op.monotone(A)
        new = u.copy()
        new[inner] = u[inner] + grid.dt * op.apply(u, A)
        t_next = grid.time(k + 1)
        b = np.asarray(data(Xb, np.full(Xb.shape[:-1], t_next)), dtype=float)
        if not np.all(np.isfinite(b)):
            raise ConfigError("boundary data must be finite")
        new[op.boundary] = b
        d_min, d_max = min(d_min, float(b.min())), max(d_max, float(b.max()))
        u = new
        u_min, u_max = min(u_min, float(u.min())), max(u_max, float(u.max()))
        observe(u, t_next)
    empty = [k for k, v in stats.items() if v.nodes == 0]
    if empty:
        raise InfeasibleDiscretization(
            f"no grid node falls in {', '.join(empty)} at resolution {list(grid.shape)}")
    return SolveResult(grid, u, stats, u_min, u_max, d_min, d_max, monotone, history)


# -- helpers for experiments ----------------------------------------------------

def window(s: BlockStructure, consts, r: float, z0: Point | None = None,
           spread: float = 2.0) -> Box:
    """Box around ``B_{spread sigma0 r} x (-b r^2, 0]``; contains Q2, Q3 and Q+-."""
    z0 = Point.origin(s.N) if z0 is None else z0
    c = Cylinder(z0, spread * consts.sigma0 * r, -consts.b_B * r * r, 0.0)
    return covering_box(s, c)


def window_inside_outer(s: BlockStructure, consts, r: float, box: Box,
                        z0: Point | None = None) -> bool:
    """Whether every corner of the window lies in the ball of radius ``K r``."""
    z0 = Point.origin(s.N) if z0 is None else z0
    corners = np.array(np.meshgrid(*zip(box.lo, box.hi), indexing="ij")).reshape(s.N, -1).T
    return bool(np.all(norm_B(s, corners - np.asarray(z0.x)) < consts.K * r))


def _bump(box: Box):
    """Smooth, positive inside the box, zero on its faces."""
    mid, half = 0.5 * (box.lo + box.hi), 0.5 * (box.hi - box.lo)

    def f(x):
        y = (np.asarray(x) - mid) / half
        return np.prod(np.cos(0.5 * np.pi * np.clip(y, -1, 1)), axis=-1)

    return f, mid, half


def pullback_field(f: CoefficientField, rho: float) -> CoefficientField:
    """``A_rho(x, t) = A(delta_rho (x, t))``; solutions transform by the same dilation."""
    s = f.structure

    def ev(x, t):
        return f.matrix(dilate_spatial(s, rho, x), rho * rho * np.asarray(t))

    mod = None if f.modulus is None else (lambda e: f.modulus(rho * e))
    return CoefficientField(s, ev, f.lam, f.Lam, kind=f"{f.kind}-pullback", modulus=mod,
                            params={**f.params, "pullback": rho}, seed=f.seed)


def random_nonnegative_data(s: BlockStructure, box: Box, seed: int, bumps: int = 4):
    """Sum of Gaussian bumps plus a floor, all nonnegative."""
    rng = np.random.default_rng(seed)
    mid, half = 0.5 * (box.lo + box.hi), 0.5 * (box.hi - box.lo)
    centers = rng.uniform(-1, 1, (bumps, s.N))
    widths = rng.uniform(0.2, 0.8, bumps)
    weights = rng.uniform(0.1, 1.0, bumps)
    floor = rng.uniform(0.0, 0.2)

    def data(x, t):
        y = (np.asarray(x) - mid) / half
        d2 = np.sum((y[..., None, :] - centers) ** 2, axis=-1)
        return floor + np.sum(weights * np.exp(-d2 / widths ** 2), axis=-1)

    return data


def _mp(v):
    return v if isinstance(v, mpmath.mpf) else mpmath.mpf(v)


# -- growth estimate -----------------------------------------------------------------

SELECTORS = {"none": None, "half": 0.0, "most": 0.5}


def growth_experiment(field: CoefficientField, consts, r: float = 1.0, selector: str = "half",
                      resolution=None, eta_override=None,
                      allowance: float = ALLOWANCE) -> dict:
    """Check ``sup_D u >= (1 + eta |Q3 \\ D| / |Q3|) sup_{D n Q2} u`` on a solved ``v``.

    ``D = {v > 0}`` inside the window, ``u = v`` there. The data are a bump that
    vanishes on the window faces, made negative on the part picked by
    ``selector`` so that ``v <= 0`` on the window boundary inside the outer cylinder.
    """
    s = field.structure
    if selector not in SELECTORS:
        raise ConfigError(f"unknown selector {selector!r}; choose from {sorted(SELECTORS)}")
    box = window(s, consts, r)
    if resolution is None:
        resolution = level_resolution(s, box, consts.sigma0 * r)
    bump, mid, half = _bump(box)
    cut = SELECTORS[selector]

    def data(x, t):
        b = bump(x)
        if cut is None:
            return b
        y0 = (np.asarray(x)[..., 0] - mid[0]) / half[0]
        return b * np.tanh(8 * (y0 + cut))

    from .geometry import named_cylinders

    cyl = named_cylinders(consts, r, N=s.N)
    res = solve(field, box, data, resolution, regions={"Q2": cyl.Q2, "Q3": cyl.Q3})
    eta = _mp(consts.eta) if eta_override is None else _mp(eta_override)
    sup_D = max(res.u_max, 0.0)
    sup_D2 = res.regions["Q2"].sup_positive
    frac = res.regions["Q3"].nonpositive_fraction
    report = {
        "experiment": "growth", "selector": selector, "r": r,
        "resolution": list(res.grid.shape), "eta": mpmath.nstr(eta, 17),
        "sup_D": sup_D, "sup_D_cap_Q2": sup_D2, "complement_fraction": frac,
        "window_inside_outer": window_inside_outer(s, consts, r, box),
        "monotone": res.monotone,
    }
    if sup_D2 <= 0:
        report.update(vacuous=True, passed=True, slack=None,
                      note="inequality vacuous: D misses Q2")
        return report
    with mpmath.workdps(30):
        rhs = (1 + eta * frac) * sup_D2
        slack = mpmath.mpf(sup_D) - rhs + allowance * sup_D
        report.update(vacuous=False, rhs=mpmath.nstr(rhs, 17), slack=mpmath.nstr(slack, 17),
                      passed=bool(slack >= 0))
    return report


# -- oscillation decay --------------------------------------------------------------

def oscillation_levels(consts, r: float, levels: int, z0: Point):
    """Nested cylinders ``B_{rho_k} x (-b rho_k^2, 0]`` with dyadic ``rho_k = sigma0 r 2^-k``."""
    out = []
    for k in range(levels):
        rho = consts.sigma0 * r * 2.0 ** -k
        out.append((rho, Cylinder(z0, rho, -consts.b_B * rho * rho, 0.0)))
    return out


def holder_fit(radii, oscs) -> float:
    """Slope of ``log osc`` against ``log radius`` over the levels with positive oscillation."""
    radii, oscs = np.asarray(radii, float), np.asarray(oscs, float)
    keep = oscs > 0
    if keep.sum() < 2:
        return float("inf")
    slope, _ = np.polyfit(np.log(radii[keep]), np.log(oscs[keep]), 1)
    return float(slope)


def level_resolution(s: BlockStructure, box: Box, rho_min: float, base: int = DEFAULT_RESOLUTION,
                     per_level: float = 2.0, cap: int = 2048) -> tuple:
    """Nodes per axis so the smallest level spans ``per_level`` steps in every coordinate."""
    width = box.hi - box.lo
    need = np.ceil(per_level * width / (2 * rho_min ** s.degrees)).astype(int) + 1
    res = np.maximum(base, need)
    if np.any(res > cap):
        raise InfeasibleDiscretization(
            f"levels down to radius {rho_min:.3g} need {res.tolist()} nodes per axis (cap {cap})")
    return tuple(int(v) for v in res)


def oscillation_experiment(field: CoefficientField, consts, r: float = 1.0, levels: int = 4,
                           resolution=None, data: Optional[Callable] = None,
                           allowance: float = ALLOWANCE, min_nodes: int = 4) -> dict:
    s = field.structure
    z0 = Point.origin(s.N)
    box = window(s, consts, r, spread=1.25)
    lv = oscillation_levels(consts, r, levels, z0)
    if resolution is None:
        resolution = level_resolution(s, box, lv[-1][0])
    if data is None:
        bump, mid, half = _bump(box)

        def data(x, t):
            y = (np.asarray(x) - mid) / half
            return bump(x) * (1.5 + np.sin(2.0 * y[..., 0] + 1.0) + 0.5 * y[..., -1])

    res = solve(field, box, data, resolution, regions={f"L{k}": c for k, (_, c) in enumerate(lv)})
    radii, oscs, usable = [], [], []
    for k, (rho, _) in enumerate(lv):
        st = res.regions[f"L{k}"]
        if st.nodes >= min_nodes and st.slabs >= 2:
            radii.append(rho)
            oscs.append(st.osc)
            usable.append(k)
    if len(usable) < 3:
        raise InfeasibleDiscretization(
            f"only {len(usable)} usable dyadic levels at resolution {list(res.grid.shape)}")
    P = _mp(consts.P)
    ratios, ok = [], True
    for a, b in zip(oscs[:-1], oscs[1:]):
        ratios.append(a / b if b > 0 else float("inf"))
        if mpmath.mpf(a) < P * b - allowance * oscs[0]:
            ok = False
    alpha_emp = holder_fit(radii, oscs)
    alpha = _mp(consts.alpha)
    holder_ok = bool(alpha_emp >= alpha * (1 - allowance)) if np.isfinite(alpha_emp) else True
    return {"experiment": "oscillation", "r": r, "levels": usable, "radii": radii,
            "osc": oscs, "ratios": ratios, "P": mpmath.nstr(P, 17),
            "alpha": mpmath.nstr(alpha, 17), "alpha_emp": alpha_emp,
            "decay_ok": ok, "holder_ok": holder_ok, "passed": bool(ok and holder_ok),
            "resolution": list(res.grid.shape), "monotone": res.monotone}


# -- Harnack -----------------------------------------------------------------------

def harnack_experiment(field: CoefficientField, consts, r: float = 1.0,
                       z0: Point | None = None, data: Optional[Callable] = None,
                       resolution=None, allowance: float = ALLOWANCE) -> dict:
    """Solve on a window and compare ``sup`` on the lower cylinder with ``inf`` on the upper one."""
    s = field.structure
    z0 = Point.origin(s.N) if z0 is None else z0
    if consts.hypothesis == "H2":
        if consts.r0 is None:
            raise ConfigError("the H2 report carries no radius r0")
        if r > consts.r0 * (1 + 1e-12):
            raise HypothesisViolation(f"H2 Harnack check needs r <= r0 = {consts.r0:.6g}")
    from .geometry import named_cylinders

    cyl = named_cylinders(consts, r, z0)
    box = window(s, consts, r, z0, spread=1.25)
    if resolution is None:
        resolution = level_resolution(s, box, 0.5 * consts.sigma0 * r)
    if data is None:
        data = random_nonnegative_data(s, box, 0x5EED)
    res = solve(field, box, data, resolution, regions={"minus": cyl.Qminus, "plus": cyl.Qplus})
    sup_m = res.regions["minus"].sup
    inf_p = res.regions["plus"].inf
    C = _mp(consts.C_harnack)
    with mpmath.workdps(30):
        ratio = mpmath.mpf(sup_m) / inf_p if inf_p > 0 else mpmath.inf
        passed = bool((1 - allowance) * mpmath.mpf(sup_m) <= C * max(inf_p, 0.0))
    flag = bool(inf_p <= 0 and sup_m > 0)
    return {"experiment": "harnack", "hypothesis": consts.hypothesis, "r": r,
            "supQminus": sup_m, "infQplus": inf_p,
            "ratio": float(ratio) if ratio != mpmath.inf else "inf",
            "C_harnack": mpmath.nstr(C, 17), "passed": passed,
            "positivity_violation": flag, "nonnegative": res.nonnegative,
            "resolution": list(res.grid.shape), "monotone": res.monotone,
            "window_inside_outer": window_inside_outer(s, consts, r, box, z0)}


# -- convergence against the fundamental solution ------------------------------------

def gamma0_convergence(s: BlockStructure, resolutions=(32, 64, 128), half_width: float = 1.0,
                       t_span=(0.0, 0.1), pole_time: float = -1.0) -> dict:
    """L-infinity error against ``Gamma0(pole^-1 o z)`` for ``A = I``.

    The pole sits below the box, so the exact solution is smooth on it.
    """
    from .fields import make_field
    from .group import compose, inverse

    f = make_field(s, "constant", 1.0, 1.0)
    pole = Point(np.zeros(s.N), np.array(pole_time))
    ipole = inverse(s, pole)

    def exact(x, t):
        z = compose(s, ipole, Point(np.asarray(x), np.asarray(t, dtype=float)))
        return gamma0(s, None, z)

    box = Box(np.full(s.N, -half_width), np.full(s.N, half_width), *t_span)
    errors = []
    for n in resolutions:
        res = solve(f, box, exact, n)
        X = res.grid.nodes()
        err = np.max(np.abs(res.u - exact(X, np.full(res.grid.shape, res.grid.t1))))
        errors.append(float(err))
    orders = [math.log2(a / b) * 1.0 / math.log2(n2 / n1)
              for a, b, n1, n2 in zip(errors[:-1], errors[1:], resolutions[:-1], resolutions[1:])]
    return {"resolutions": list(resolutions), "errors": errors, "orders": orders}


def harnack_campaign(fields, consts, data_count: int = 10, r: float = 1.0,
                     z0: Point | None = None, resolution=None, seed: int = 0x5EED,
                     allowance: float = ALLOWANCE) -> dict:
    """Harnack experiment over every (field, boundary data) pair.

    Data seeds are spawned from ``seed``.
    """
    if not fields:
        raise ConfigError("the Harnack campaign needs at least one field")
    s = fields[0].structure
    z0 = Point.origin(s.N) if z0 is None else z0
    box = window(s, consts, r, z0, spread=1.25)
    seeds = [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(data_count)]
    runs, worst = [], None
    for i, f in enumerate(fields):
        for j, sd in enumerate(seeds):
            rep = harnack_experiment(f, consts, r, z0, random_nonnegative_data(s, box, sd),
                                     resolution, allowance)
            runs.append({"field": i, "data": j, "ratio": rep["ratio"], "passed": rep["passed"]})
            if worst is None or _ratio_key(rep) > _ratio_key(worst):
                worst = rep
    failures = sum(not run["passed"] for run in runs)
    return {"experiment": "harnack_campaign", "hypothesis": consts.hypothesis, "r": r,
            "fields": len(fields), "data": data_count, "runs": runs,
            "violations": failures, "passed": failures == 0,
            "max_ratio": worst["ratio"], "C_harnack": worst["C_harnack"], "worst": worst}


def _ratio_key(rep) -> float:
    return float("inf") if rep["ratio"] == "inf" else float(rep["ratio"])
