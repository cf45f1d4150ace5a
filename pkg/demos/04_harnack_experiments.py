"""Solve the equation on rough coefficient fields and test the proven inequalities.

The measured Harnack ratios are of order one while the proven constant is
astronomically large: the checks are necessary conditions, not sharp ones.

Run with ``python3 demos/04_harnack_experiments.py`` (about a minute).
"""
from kolmogorov_harnack import (growth_experiment, harnack_experiment, make_field,
                                oscillation_experiment, pipeline, prototype, random_h1_fields)
from kolmogorov_harnack.solver import gamma0_convergence, harnack_campaign

s = prototype()
consts = pipeline(s, "H1", 1.0, 1.2)

conv = gamma0_convergence(s, (32, 64, 128))
print("solver vs Gamma0: errors", [f"{e:.3e}" for e in conv["errors"]],
      "orders", [f"{o:.3f}" for o in conv["orders"]])

field = make_field(s, "checkerboard", 1.0, 1.2, seed=1)
for sel in ("none", "half", "most"):
    g = growth_experiment(field, consts, selector=sel)
    print(f"growth [{sel}]: sup_D = {g['sup_D']:.4f}, sup on Q2 = {g['sup_D_cap_Q2']:.4f}, "
          f"passed = {g['passed']}")

osc = oscillation_experiment(field, consts, levels=3)
print("oscillation per dyadic level:", [f"{o:.4f}" for o in osc["osc"]],
      f"empirical exponent {osc['alpha_emp']:.3f}")

h = harnack_experiment(field, consts)
print(f"Harnack: sup Q- = {h['supQminus']:.4f}, inf Q+ = {h['infQplus']:.4f}, "
      f"ratio {h['ratio']:.4f} <= C = {h['C_harnack'][:12]}...")

camp = harnack_campaign(random_h1_fields(s, 1.0, 1.2, 4, seed=7), consts, data_count=3)
print(f"campaign over {len(camp['runs'])} solves: max ratio {camp['max_ratio']:.4f}, "
      f"violations {camp['violations']}")
