"""Pointwise robustness, robust sets and the robust neighborhood size."""

import numpy as np

from weakexpand import (LabelAssignment, average_robustness, build_graph,
                        markov_robust_mass_bound, planted_population, pointwise_robustness,
                        robust_neighborhood_size, robust_set)

pop, edges = planted_population(12, 2, [0.2, 0.2], 0.6, 0.5, seed=3)
g = build_graph(pop, edges)
rng = np.random.default_rng(0)
f = LabelAssignment.from_array(pop, np.where(rng.random(len(pop)) < 0.85,
                                             pop.gold, 1 - pop.gold))

r = np.array([pointwise_robustness(g, f, x) for x in pop.ids])
print("r(x):", np.round(r, 3))
for eta in (0.0, 0.2, 0.5):
    print(f"eta={eta}: robust set has {len(robust_set(g, f, eta))} of {len(pop)} points")

gamma = average_robustness(g, f, pop.ids)
print(f"average robustness {gamma:.3f}; Markov bound on non-robust mass at eta=0.5:",
      round(markov_robust_mass_bound(gamma, 0.5), 3))

U = set(pop.ids[:3])
for eta in (0.0, 0.25, 0.5):
    br = robust_neighborhood_size(g, U, pop.ids, eta)
    print(f"P_(1-{eta})(U, X) = {br.value:.4f}, witness size {len(br.witness)}")
loose = robust_neighborhood_size(g, U, pop.ids, 0.25, exact_threshold=0)
print(f"greedy bracket at eta=0.25: [{loose.lower:.4f}, {loose.upper:.4f}]")
