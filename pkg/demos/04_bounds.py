"""Bound evaluators with their precondition reports."""

import numpy as np

from weakexpand import (coverage_bound, fu_baseline_bound, plc_bound, plc_simplified_bound,
                        wei_applicability, wei_plc_bound)

rows = [  # (alpha, weak error, c on S, c1, c2)
    (0.11, 0.12, 0.848, 0.16, 0.98),
    (0.33, 0.29, 0.497, 0.75, 0.55),
]
for alpha, err, c, c1, c2 in rows:
    plc = plc_bound(c, 0.0, alpha, err, 0.0)
    cov = coverage_bound(c1, c2, 0.0, alpha, err, 0.0)
    print(f"alpha={alpha}: covered bound {plc.value:.4f}, uncovered bound {cov.value:.4f}")
    for p in plc.preconditions:
        print(f"    {p.name}: {p.value:.4f} {'ok' if p.satisfied else 'FAILS'}")

r = wei_plc_bound(0.32, 0.0, 0.33, 0.33, 0.0)
print("bad-to-good bound at alpha=0.33, c=0.32 applicable:", r.applicable, r.notes)
print("baseline applicable at coverage 0.5:", wei_applicability(0.5).applicable)
print("simplified covered bound:", plc_simplified_bound(0.9, 0.1, 0.15, 0.0).value)

ps = np.linspace(0, 1, 5)
print("label-model baseline at alpha=0.2:",
      np.round([fu_baseline_bound(p, 0.2).value for p in ps], 3))
