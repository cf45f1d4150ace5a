"""The group behind the operator, and the cylinders built from it.

Run with ``python3 demos/01_group_geometry.py``.
"""
import numpy as np

from kolmogorov_harnack import (Cylinder, Point, compose, dilate, inverse, matrix_E, membership,
                                norm_B, prototype)
from kolmogorov_harnack.geometry import covering_box, cylinder_measure, unit_ball_volume

s = prototype()
print(f"prototype: p = {list(s.p)}, N = {s.N}, homogeneous dimension Q = {s.Q}")

# E(sigma) = exp(-sigma B^T) is a finite series because B is nilpotent
print("E(0.5) =\n", matrix_E(s, 0.5))

z, w = Point([1.0, 2.0], 0.3), Point([-0.5, 0.25], -1.0)
zw = compose(s, z, w)
print("z o w =", zw.x, zw.t)
back = compose(s, zw, inverse(s, w))
print("(z o w) o w^-1 recovers z:", np.allclose(back.x, z.x), np.isclose(back.t, z.t))

# dilations are automorphisms: delta_r(z o w) = delta_r z o delta_r w
r = 3.0
lhs, rhs = dilate(s, r, zw), compose(s, dilate(s, r, z), dilate(s, r, w))
print("dilation is an automorphism:", np.allclose(lhs.x, rhs.x), np.isclose(lhs.t, rhs.t))

# the homogeneous norm scales with degree one
x = np.array([0.4, -0.2])
print("|delta_r x| / (r |x|) =", norm_B(s, dilate(s, r, Point(x, 0.0)).x) / (r * norm_B(s, x)))

sig0, sigbar = s.sigma_bounds
print(f"norm comparison constants: sigma0 = {sig0:.6f}, sigbar = {sigbar:.6f}")

# cylinders are left translates of centred boxes-in-the-norm
c = Cylinder(Point([0.3, -0.1], 0.5), 0.8, -0.4, 0.0)
box = covering_box(s, c)
rng = np.random.default_rng(0)
n = 400_000
pts = Point(rng.uniform(box.lo, box.hi, (n, 2)), rng.uniform(box.t_lo, box.t_hi, n))
frac = membership(s, c, pts).mean()
print(f"|B_1| = {unit_ball_volume(s):.6f}")
print(f"cylinder measure: exact {cylinder_measure(s, c):.5f}, "
      f"Monte Carlo {frac * box.volume:.5f}")
