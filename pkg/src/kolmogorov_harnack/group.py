"""Block structure of the drift matrix and the homogeneous group it induces.

Points are ``(x, t)`` pairs. Every operation accepts batches: ``x`` may have
shape ``(..., N)`` with ``t`` of shape ``(...)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class Point:
    """Space-time point ``z = (x, t)``, possibly a batch."""

    x: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if x.ndim == 0:
            raise ValueError("x must be a vector")
        if x.shape[:-1] != t.shape:
            t = np.broadcast_to(t, x.shape[:-1]).copy()
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)

    def __len__(self):
        return 1 if self.x.ndim == 1 else self.x.shape[0]

    def __getitem__(self, idx):
        return Point(self.x[idx], self.t[idx])

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.t)))

    def to_json(self) -> dict:
        return {"x": self.x.tolist(), "t": self.t.tolist()}

    @classmethod
    def from_json(cls, obj) -> "Point":
        if isinstance(obj, dict):
            return cls(obj["x"], obj["t"])
        obj = list(obj)
        return cls(obj[:-1], obj[-1])

    @classmethod
    def origin(cls, N: int) -> "Point":
        return cls(np.zeros(N), 0.0)


@dataclass(frozen=True, eq=False)
class BlockStructure:
    """Block sizes ``p`` and superdiagonal blocks of the drift matrix ``B``."""

    p: tuple
    blocks: tuple
    B: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return int(sum(self.p))

    @property
    def n(self) -> int:
        return len(self.p) - 1

    @property
    def Q(self) -> int:
        return int(sum((2 * i + 1) * pi for i, pi in enumerate(self.p)))

    @property
    def p0(self) -> int:
        return int(self.p[0])

    @cached_property
    def offsets(self) -> tuple:
        return tuple(int(v) for v in np.concatenate([[0], np.cumsum(self.p)]))

    @cached_property
    def degrees(self) -> np.ndarray:
        """Homogeneity degree ``2i+1`` of each spatial coordinate."""
        d = np.concatenate([np.full(pi, 2 * i + 1) for i, pi in enumerate(self.p)])
        d.setflags(write=False)
        return d

    @cached_property
    def M_B(self) -> float:
        if not self.blocks:
            return 0.0
        return float(max(np.linalg.norm(b.T, 2) for b in self.blocks))

    @cached_property
    def c_nB(self) -> float:
        n, m = self.n, self.M_B
        if n == 0:
            return 0.0
        return n * (n + 1) / 2 * max(m ** (1 / (2 * n + 1)), m ** (n / (2 * n + 1)))

    @cached_property
    def _exp_terms(self) -> np.ndarray:
        # (-B^T)^k / k! for k = 0..n
        terms = [np.eye(self.N)]
        mbt = -self.B.T
        for k in range(1, self.n + 1):
            terms.append(terms[-1] @ mbt / k)
        out = np.array(terms)
        out.setflags(write=False)
        return out

    @cached_property
    def sigma_bounds(self) -> tuple:
        return _sigma_bounds(self)

    def block(self, x: np.ndarray, i: int) -> np.ndarray:
        a, b = self.offsets[i], self.offsets[i + 1]
        return np.asarray(x)[..., a:b]

    def I0(self) -> np.ndarray:
        """Diffusion pattern with the identity in the first block."""
        out = np.zeros((self.N, self.N))
        out[: self.p0, : self.p0] = np.eye(self.p0)
        return out

    def embed(self, a0: np.ndarray) -> np.ndarray:
        """Embed a ``p0 x p0`` matrix (or batch) into the ``N x N`` pattern."""
        a0 = np.asarray(a0, dtype=float)
        out = np.zeros(a0.shape[:-2] + (self.N, self.N))
        out[..., : self.p0, : self.p0] = a0
        return out

    def to_json(self) -> dict:
        return {"p": list(self.p), "blocks": [b.tolist() for b in self.blocks]}

    @classmethod
    def from_json(cls, obj) -> "BlockStructure":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return build_structure(obj["p"], obj.get("blocks", []))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad structure description: {exc}") from exc


def build_structure(p: Sequence[int], blocks: Sequence) -> BlockStructure:
    """Validate block sizes and blocks and assemble ``B``."""
    p = [int(v) for v in p]
    if not p:
        raise ConfigError("block size list p is empty")
    if any(v < 1 for v in p):
        raise ConfigError("block sizes must be positive")
    if any(a < b for a, b in zip(p, p[1:])):
        raise ConfigError("block sizes must be non-increasing")
    blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]
    if len(blocks) != len(p) - 1:
        raise ConfigError(f"expected {len(p) - 1} blocks, got {len(blocks)}")
    N = sum(p)
    B = np.zeros((N, N))
    off = np.concatenate([[0], np.cumsum(p)])
    for j, b in enumerate(blocks, start=1):
        if b.shape != (p[j - 1], p[j]):
            raise ConfigError(
                f"block {j} has shape {b.shape}, expected {(p[j - 1], p[j])}")
        sv = np.linalg.svd(b, compute_uv=False)
        rank = int(np.sum(sv > _RANK_TOL * max(1.0, sv[0])))
        if rank < p[j]:
            raise ConfigError(f"block {j} is rank-deficient (rank {rank} < {p[j]})")
        B[off[j - 1]:off[j], off[j]:off[j + 1]] = b
    for b in blocks:
        b.setflags(write=False)
    B.setflags(write=False)
    return BlockStructure(tuple(p), tuple(blocks), B)


def prototype() -> BlockStructure:
    """The two-dimensional structure ``p = [1, 1]`` with unit block."""
    return build_structure([1, 1], [[[1.0]]])


def matrix_E(s: BlockStructure, sigma) -> np.ndarray:
    """``exp(-sigma B^T)`` via the finite nilpotent series."""
    sigma = np.asarray(sigma, dtype=float)
    powers = sigma[..., None] ** np.arange(s.n + 1)
    return np.einsum("...k,kij->...ij", powers, s._exp_terms)


def apply_E(s: BlockStructure, sigma, x) -> np.ndarray:
    """``E(sigma) x`` by Horner's rule, without forming per-point matrices."""
    sigma = np.asarray(sigma, dtype=float)[..., None]
    x = np.asarray(x, dtype=float)
    P = s._exp_terms
    out = x @ P[s.n].T
    for k in range(s.n - 1, -1, -1):
        out = out * sigma + x @ P[k].T
    return out


def _apply(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", m, x)


def compose(s: BlockStructure, z: Point, w: Point) -> Point:
    """Group law ``z o w = (xi + E(tau) x, t + tau)`` with ``w = (xi, tau)``."""
    return Point(w.x + apply_E(s, w.t, z.x), z.t + w.t)


def inverse(s: BlockStructure, z: Point) -> Point:
    return Point(-apply_E(s, -z.t, z.x), -z.t)


def dilate_spatial(s: BlockStructure, r, x) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("dilation factor must be positive")
    return np.asarray(x, dtype=float) * r[..., None] ** s.degrees


def dilate(s: BlockStructure, r, z: Point) -> Point:
    return Point(dilate_spatial(s, r, z.x), np.asarray(r, dtype=float) ** 2 * z.t)


def dilation_matrix(s: BlockStructure, r: float) -> np.ndarray:
    return np.diag(float(r) ** s.degrees.astype(float))


def norm_B(s: BlockStructure, x) -> np.ndarray:
    """Homogeneous norm ``sum_i |x^(p_i)|^(1/(2i+1))``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    for i in range(s.n + 1):
        out = out + np.linalg.norm(s.block(x, i), axis=-1) ** (1.0 / (2 * i + 1))
    return out


def norm_B_spacetime(s: BlockStructure, z: Point) -> np.ndarray:
    return norm_B(s, z.x) + np.sqrt(np.abs(z.t))


def sigma_bounds(s: BlockStructure) -> tuple:
    """Extremes of the homogeneous norm on the Euclidean unit sphere."""
    return s.sigma_bounds


# -- extremes of |x|_B on the unit sphere ---------------------------------
#
# |x|_B depends on x only through the block norms.  Writing w_i for the squared
# block norms, the sphere maps onto the simplex sum(w) = 1 and the objective
# becomes sum_i w_i ** q_i with q_i = 1/(2(2i+1)).  The search runs there:
# seeds from a sphere sample, then pairwise bounded line searches moving mass.

def _simplex_objective(w: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.sum(np.clip(w, 0.0, None) ** q, axis=-1)


def _refine(w: np.ndarray, q: np.ndarray, sign: float, tol: float, max_sweeps: int):
    """Pairwise coordinate search minimizing ``sign * objective``."""
    m = len(w)
    w = w.copy()

    def obj(v):
        return sign * _simplex_objective(v, q)

    best = obj(w)
    for _ in range(max_sweeps):
        improved = False
        for i in range(m):
            for j in range(i + 1, m):
                mass = w[i] + w[j]
                if mass <= 0:
                    continue

                def f(a, i=i, j=j, mass=mass):
                    v = w.copy()
                    v[i], v[j] = a, mass - a
                    return obj(v)

                inner = minimize_scalar(f, bounds=(0.0, mass), method="bounded",
                                        options={"xatol": tol})
                cands = [0.0, mass, float(inner.x)]
                vals = [f(a) for a in cands]
                k = int(np.argmin(vals))
                if vals[k] < best - 1e-15:
                    w[i], w[j] = cands[k], mass - cands[k]
                    best = vals[k]
                    improved = True
        if not improved:
            return w, sign * best
    raise RuntimeError("sigma_bounds: refinement did not converge")


def _sigma_bounds(s: BlockStructure, tol: float = 1e-9, max_sweeps: int = 200):
    if s.n == 0:
        return 1.0, 1.0
    q = np.array([1.0 / (2 * (2 * i + 1)) for i in range(s.n + 1)])
    rng = np.random.default_rng(0x5EED)
    pts = rng.standard_normal((max(1000 * s.N, 1000), s.N))
    pts = np.concatenate([pts, np.eye(s.N), -np.eye(s.N)])
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    w = np.stack([np.sum(s.block(pts, i) ** 2, axis=-1) for i in range(s.n + 1)], axis=-1)
    vals = _simplex_objective(w, q)
    results = []
    for sign in (1.0, -1.0):
        order = np.argsort(sign * vals)[:5]
        best = None
        for k in order:
            _, v = _refine(w[k], q, sign, tol, max_sweeps)
            if best is None or sign * v < sign * best:
                best = v
        results.append(float(best))
    return results[0], results[1]
