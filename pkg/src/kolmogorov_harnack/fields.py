"""Coefficient fields ``A(z)`` with spectrum in ``[lam, Lam]``."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, HypothesisViolation
from .group import BlockStructure, Point, apply_E, compose, dilate

KINDS = ("constant", "checkerboard", "smooth-oscillatory", "piecewise-random")


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Diffusion block ``A(z)`` of size ``p0 x p0`` with known ellipticity bounds."""

    structure: BlockStructure
    evaluator: Callable
    lam: float
    Lam: float
    kind: str = "custom"
    modulus: Optional[Callable] = None
    params: dict = dc_field(default_factory=dict)
    seed: int = 0

    def matrix(self, x, t) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        return self.evaluator(x, t)

    def full(self, x, t) -> np.ndarray:
        return self.structure.embed(self.matrix(x, t))

    def at(self, z: Point) -> np.ndarray:
        return self.matrix(z.x, z.t)

    @property
    def ratio(self) -> float:
        return self.Lam / self.lam

    def satisfies_h1(self) -> bool:
        return self.ratio < 1 + 2 / self.structure.Q

    def eps0(self, bound: float) -> float:
        """Largest ``eps <= 1`` with ``modulus(eps) <= bound``."""
        if self.modulus is None:
            raise HypothesisViolation("field has no modulus of continuity")
        if self.modulus(1.0) <= bound:
            return 1.0
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.modulus(mid) <= bound:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15:
                break
        if lo == 0.0:
            raise HypothesisViolation("modulus exceeds the admissible bound at every radius")
        return lo

    def to_json(self) -> dict:
        return {"kind": self.kind, "lambda": self.lam, "Lambda": self.Lam,
                "seed": self.seed, "params": _jsonable(self.params)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return np.asarray(obj).tolist()
    return obj


def clamp_spectrum(a: np.ndarray, lam: float, Lam: float) -> np.ndarray:
    """Project eigenvalues onto ``[lam, Lam]``."""
    w, v = np.linalg.eigh(0.5 * (a + np.swapaxes(a, -1, -2)))
    w = np.clip(w, lam, Lam)
    out = np.einsum("...ik,...k,...jk->...ij", v, w, v)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


# -- cells ------------------------------------------------------------------
#
# A cell is the set of z whose time lies in [k h^2, (k+1) h^2) and whose
# spatial part, transported back to the slab's base time by E(-tau), lies in
# the dilated unit box D_h(j + [0,1)^N).  Every cell is a union of group
# translates (y, t_k) o (0, tau), so cell boundaries follow the drift.

def cell_index(s: BlockStructure, x, t, h: float, offset) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    tt = t / (h * h) + offset[-1]
    k = np.floor(tt)
    tau = (tt - k) * h * h
    y = apply_E(s, -tau, x)
    j = np.floor(y / h ** s.degrees + offset[:-1])
    return np.concatenate([j, k[..., None]], axis=-1).astype(np.int64)


def _hash(idx: np.ndarray, seed: int, salt: int = 0) -> np.ndarray:
    """splitmix64 over the cell index, one uint64 per cell."""
    with np.errstate(over="ignore"):
        h = np.full(idx.shape[:-1], np.uint64((seed * 0x9E3779B97F4A7C15 + salt) % 2 ** 64))
        for c in np.moveaxis(idx.astype(np.uint64), -1, 0):
            h = h ^ (c + np.uint64(0x9E3779B97F4A7C15) + (h << np.uint64(6)) + (h >> np.uint64(2)))
            h = h + np.uint64(0x9E3779B97F4A7C15)
            h = (h ^ (h >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            h = (h ^ (h >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            h = h ^ (h >> np.uint64(31))
    return h


def _uniform(idx, seed, salt):
    return (_hash(idx, seed, salt) >> np.uint64(11)).astype(float) / 2.0 ** 53


def _random_spd(idx, seed, p0, lam, Lam):
    eig = np.stack([lam + (Lam - lam) * _uniform(idx, seed, 1 + i) for i in range(p0)], -1)
    if p0 == 1:
        return eig[..., None]
    g = np.stack([_uniform(idx, seed, 100 + i) for i in range(2 * p0 * p0)], -1)
    u1, u2 = g[..., : p0 * p0], g[..., p0 * p0:]
    normal = np.sqrt(-2 * np.log1p(-u1)) * np.cos(2 * np.pi * u2)
    q, _ = np.linalg.qr(normal.reshape(idx.shape[:-1] + (p0, p0)))
    out = np.einsum("...ik,...k,...jk->...ij", q, eig, q)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


# -- constructors -----------------------------------------------------------

def make_field(s: BlockStructure, kind: str, lam: float, Lam: float,
               params: dict | None = None, seed: int = 0x5EED,
               require_h1: bool = False) -> CoefficientField:
    """Build one of the test fields; see ``KINDS``."""
    params = dict(params or {})
    lam, Lam = float(lam), float(Lam)
    if not (0 < lam <= Lam):
        raise ConfigError(f"need 0 < lambda <= Lambda, got {lam}, {Lam}")
    if require_h1 and not Lam / lam < 1 + 2 / s.Q:
        raise HypothesisViolation(
            f"H1 requires Lambda/lambda < 1 + 2/Q = {1 + 2 / s.Q:.6g}, got {Lam / lam:.6g}")
    p0 = s.p0
    rng = np.random.default_rng(seed)

    if kind == "constant":
        a0 = np.asarray(params.get("A0", lam * np.eye(p0)), dtype=float).reshape(p0, p0)
        ev = np.linalg.eigvalsh(a0)
        if not np.allclose(a0, a0.T) or ev[0] < lam - 1e-14 or ev[-1] > Lam + 1e-14:
            raise ConfigError("constant matrix outside the ellipticity band")
        a0 = 0.5 * (a0 + a0.T)
        params["A0"] = a0

        def evaluator(x, t):
            return np.broadcast_to(a0, x.shape[:-1] + (p0, p0)).copy()

        return CoefficientField(s, evaluator, lam, Lam, kind, lambda e: 0.0, params, seed)

    if kind in ("checkerboard", "piecewise-random"):
        h = float(params.get("cell", 0.25))
        if not h > 0:
            raise ConfigError("cell size must be positive")
        offset = np.asarray(params.get("offset", rng.uniform(0, 1, s.N + 1)), dtype=float)
        params.update(cell=h, offset=offset)

        if kind == "checkerboard":
            low = float(params.get("low", lam))
            high = float(params.get("high", Lam))
            if not (lam <= low <= Lam and lam <= high <= Lam):
                raise ConfigError("checkerboard values outside the ellipticity band")
            params.update(low=low, high=high)

            def evaluator(x, t):
                idx = cell_index(s, x, t, h, offset)
                val = np.where(np.sum(idx, axis=-1) % 2 == 0, low, high)
                return val[..., None, None] * np.eye(p0)
        else:
            def evaluator(x, t):
                idx = cell_index(s, x, t, h, offset)
                return _random_spd(idx, seed, p0, lam, Lam)

        return CoefficientField(s, evaluator, lam, Lam, kind, None, params, seed)

    if kind == "smooth-oscillatory":
        mid = float(params.get("mid", 0.5 * (lam + Lam)))
        sm = np.asarray(params.get("S", np.eye(p0)), dtype=float).reshape(p0, p0)
        if not np.allclose(sm, sm.T):
            raise ConfigError("S must be symmetric")
        snorm = float(np.linalg.norm(sm, 2))
        amp = float(params.get("amp", (0.5 * (Lam - lam)) / snorm if snorm else 0.0))
        if mid - abs(amp) * snorm < lam - 1e-14 or mid + abs(amp) * snorm > Lam + 1e-14:
            raise ConfigError("oscillation amplitude exceeds the ellipticity band")
        k = np.asarray(params.get("k", rng.uniform(-2, 2, s.N)), dtype=float)
        w1 = float(params.get("omega_t", rng.uniform(-2, 2)))
        radius = float(params.get("radius", 4.0))
        params.update(mid=mid, amp=amp, S=sm, k=k, omega_t=w1, radius=radius)
        kb = np.array([np.linalg.norm(s.block(k, i)) for i in range(s.n + 1)])
        bnorm = float(np.linalg.norm(s.B, 2))
        c = abs(amp) * snorm

        def evaluator(x, t):
            phase = np.sin(w1 * t + x @ k)
            a = mid * np.eye(p0) + amp * phase[..., None, None] * sm
            return clamp_spectrum(a, lam, Lam)

        def modulus(eps):
            eps = float(eps)
            arg = (abs(w1) * eps ** 2
                   + sum(kb[i] * eps ** (2 * i + 1) for i in range(s.n + 1))
                   + np.linalg.norm(k) * np.expm1(bnorm * eps ** 2) * radius)
            return c * min(2.0, arg)

        params["lipschitz"] = c * (abs(w1) + kb.sum()
                                   + np.linalg.norm(k) * np.expm1(bnorm) * radius)
        return CoefficientField(s, evaluator, lam, Lam, kind, modulus, params, seed)

    raise ConfigError(f"unknown field kind {kind!r}; expected one of {KINDS}")


def field_from_json(s: BlockStructure, obj: dict, require_h1=False) -> CoefficientField:
    try:
        return make_field(s, obj["kind"], obj["lambda"], obj["Lambda"],
                          obj.get("params", {}), int(obj.get("seed", 0x5EED)), require_h1)
    except KeyError as exc:
        raise ConfigError(f"field descriptor missing {exc}") from exc


def random_h1_fields(s: BlockStructure, lam: float, Lam: float, count: int, seed: int):
    """A deterministic mix of checkerboard and piecewise-random fields."""
    ss = np.random.SeedSequence(seed)
    out = []
    for i, child in enumerate(ss.spawn(count)):
        sub = int(child.generate_state(1)[0])
        rng = np.random.default_rng(sub)
        kind = "checkerboard" if i % 2 == 0 else "piecewise-random"
        out.append(make_field(s, kind, lam, Lam, {"cell": float(rng.uniform(0.1, 0.5))}, sub,
                              require_h1=True))
    return out


def validate_field(f: CoefficientField, region, samples: int = 1000, rng=None) -> dict:
    """Sample spectrum, symmetry and the modulus inequality over a box region."""
    from .geometry import Cylinder, sample_box, sample_cylinder

    s = f.structure
    rng = np.random.default_rng(0x5EED) if rng is None else rng
    z = sample_box(region, samples, rng)
    a = f.matrix(z.x, z.t)
    sym = float(np.max(np.abs(a - np.swapaxes(a, -1, -2)))) if a.size else 0.0
    ev = np.linalg.eigvalsh(a)
    lo, hi = float(ev.min()), float(ev.max())
    report = {
        "samples": int(samples),
        "min_eig": lo,
        "max_eig": hi,
        "ratio": hi / lo,
        "symmetry_error": sym,
        "band_violation": max(0.0, f.lam - lo, hi - f.Lam),
        "h1": f.satisfies_h1(),
        "modulus_violation": None,
    }
    if f.modulus is not None:
        eps = 10.0 ** rng.uniform(-3, 0, samples) * (1 - 1e-12)
        z0 = sample_box(region, samples, rng)
        unit = sample_cylinder(s, Cylinder(Point.origin(s.N), 1.0, -1.0, 1.0), samples, rng)
        z = compose(s, z0, dilate(s, eps, unit))
        diff = f.matrix(z.x, z.t) - f.matrix(z0.x, z0.t)
        gap = np.linalg.norm(diff, 2, axis=(-2, -1)) - np.array([f.modulus(e) for e in eps])
        report["modulus_violation"] = max(0.0, float(gap.max()))
    report["valid"] = bool(
        report["band_violation"] <= 1e-12 and sym <= 1e-14
        and (report["modulus_violation"] is None or report["modulus_violation"] <= 1e-12))
    return report
