"""Randomized soundness check of each bound, and the mutation self-test."""

from weakexpand import SuiteConfig, verify_suite
from weakexpand.testbeds import VERIFIABLE

cfg = SuiteConfig(instances=200, seed=0)
for theorem in VERIFIABLE:
    rep = verify_suite(theorem, cfg)
    bad = verify_suite(theorem, cfg, mutate=0.05)
    print(f"{theorem:14s} applicable {rep.applicable:6d}  violations {len(rep.violations)}"
          f"  min slack {rep.min_slack:.2e}  | mutated: {len(bad.violations)} violations")
