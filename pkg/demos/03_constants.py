"""Every structural constant of the Harnack argument, in order.

Some of them underflow double precision by hundreds of thousands of decades,
so the tail of the chain is carried in mpmath.

Run with ``python3 demos/03_constants.py``.
"""
import mpmath

from kolmogorov_harnack import pipeline, prototype

s = prototype()
c = pipeline(s, "H1", 1.0, 1.2)
rows = [
    ("norm comparison", f"sigma0 = {c.sigma0:.6g}, sigbar = {c.sigbar:.6g}"),
    ("time scale", f"b_B = {c.b_B:.6g}"),
    ("covariance sandwich", f"lambda1 = {c.lam1:.6g}, Lambda1 = {c.Lam1:.6g}"),
    ("kernel choice", f"s = {c.s}, beta = {c.beta}"),
    ("kernel bound exponents", f"c1 = {c.c1:.6g}, c2 = {c.c2:.6g}"),
    ("outer radius", f"K1 = {c.K1:.6g}, K = {c.K:.6g}"),
    ("strip constant", f"C_strip = {c.C_strip:.6g}"),
    ("growth constant", f"eta = {mpmath.nstr(c.eta, 8)}"),
    ("oscillation decay", f"P = 1 + eta/4, alpha = {mpmath.nstr(c.alpha, 8)}"),
    ("inclusion constants", f"C1 = {c.C1:.6g}, C2 = {c.C2:.6g}"),
    ("Harnack constant", f"C = {mpmath.nstr(c.C_harnack, 8)}"),
]
for name, text in rows:
    print(f"{name:24s} {text}")
print("invariants:", all(c.invariants(s).values()))

# closer to the ellipticity threshold 1 + 2/Q the strip constant blows up
for Lam in (1.2, 1.4, 1.49, 1.499):
    print(f"Lambda = {Lam}: C_strip = {pipeline(s, 'H1', 1.0, Lam).C_strip:.5g}")

# under the continuity hypothesis the result is local, valid for r <= r0
h2 = pipeline(s, "H2", 1.0, 1.2, eps0_H2=0.25)
print(f"H2: s = {h2.s}, beta = {h2.beta:.5f}, r0 = {h2.r0:.4g}")
