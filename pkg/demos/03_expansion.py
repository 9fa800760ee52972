"""Exact expansion over a mistake family, and the sample-based estimator."""

import numpy as np

from weakexpand import (MISTAKES, HypothesisClassSpec, OracleSample, build_graph,
                        default_epsilon, empirical_expansion, enumerate_hypotheses,
                        exact_expansion, generalization_margin, mistake_family, partition,
                        planted_population, vc_of_mistake_family)

pop, edges = planted_population(10, 2, [0.2, 0.2], 0.6, 0.6, seed=1)
g = build_graph(pop, edges)
hyps = enumerate_hypotheses(HypothesisClassSpec("thresholds-1d", {"flips": True}), pop)
cls = partition(pop)[0]

fam = mistake_family(g, cls.T, hyps, 0.0, MISTAKES)
est = exact_expansion(g, fam, cls.good, cls.T, q=0.1)
print(f"{len(fam)} mistake sets in T; worst expansion good->T at q=0.1: {est.c}")
# thresholds with a sign flip shatter two points
vc = vc_of_mistake_family(2)
print("VC bound for the mistake family:", vc)

# a sample-based estimate from an oracle that sends each A-point to a neighbor
rng = np.random.default_rng(0)
A, B = sorted(pop.to_set(cls.good)), sorted(pop.to_set(cls.T))
oracle = {}
for x in A:
    nb = sorted(set(g.neighbors(x)) & set(B))
    oracle[x] = nb[rng.integers(len(nb))] if nb else B[0]
sa = tuple(rng.choice(A, 50))
sb = tuple(rng.choice(B, 50))
o = OracleSample(sa, sb, oracle)
eps = default_epsilon(o.n_b)
U = {oracle[x] for x in A[:3]}  # hit by the oracle, so c_hat is informative
print("c_hat(U) =", empirical_expansion(o, U, 0.1, eps))
print("uniform margin at vc=2, n=50:", round(generalization_margin(vc, 50, 50, 0.1, 0.1), 3))
