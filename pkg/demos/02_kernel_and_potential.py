"""The fundamental solution of the constant-coefficient operator and its potentials.

Run with ``python3 demos/02_kernel_and_potential.py``.
"""
import numpy as np
from scipy.integrate import dblquad

from kolmogorov_harnack import (Cylinder, Point, RegionE, apply_LA_to_kernel, gamma0, h1_kernel,
                                kernel_derivatives, make_field, potential, prototype, strip_bound)
from kolmogorov_harnack.covariance import unit_covariance

s = prototype()

# Gamma0(., t) is a probability density in x for every t > 0; its covariance is 2 C(t)
for t in (0.1, 0.5, 1.0):
    a1, a2 = 12 * np.sqrt(2 * np.diag(unit_covariance(s)(t)))
    mass, _ = dblquad(lambda x2, x1: float(gamma0(s, None, Point([x1, x2], t))),
                      -a1, a1, -a2, a2, epsabs=1e-12)
    print(f"int Gamma0(x, {t}) dx = {mass:.8f}")

# the modified kernel Gamma_{s,beta}: for lambda = 1, Lambda = 1.2 take s = 1.2, beta = 1
kp = h1_kernel(s, 1.0, 1.2)
print(f"kernel exponent s = {kp.s}, beta = {kp.beta}")
d = kernel_derivatives(kp, Point([0.3, -0.1], 0.4))
print("value, gradient, time derivative at (0.3, -0.1, 0.4):", d.value, d.grad, d.dt)

# with this choice the kernel is a subsolution of any operator whose coefficients
# stay between 1 and 1.2, however rough: here a random checkerboard
field = make_field(s, "checkerboard", 1.0, 1.2, seed=3)
rng = np.random.default_rng(0)
t = rng.uniform(0.05, 1, 2000)
z = Point(rng.standard_normal((2000, 2)) * t[:, None] ** (0.5 * s.degrees), t)
val, scale = apply_LA_to_kernel(field, kp, Point.origin(2), z, return_scale=True)
print(f"min of L_A Gamma / scale over 2000 points: {np.min(val / scale):.3e}")

# potentials of sets, and the uniform bound over a horizontal strip
E = RegionE.from_cylinder(s, Cylinder(Point.origin(2), 1.0, -1.0, 0.0))
for zz in (Point([0.0, 0.0], 0.5), Point([0.0, 0.0], -0.5)):
    print(f"U_E at ({zz.x.tolist()}, {float(zz.t)}) = {potential(kp, E, zz):.8f}")
print(f"sup of the strip potential over R^N x R, strip [-1, 0]: {strip_bound(kp, -1.0, 0.0):.6f}")
