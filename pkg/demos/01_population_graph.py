"""Populations, partitions and the example graph on a five-point toy."""

import numpy as np

from weakexpand import (build_graph, conditional_prob, cut_weight, disagreement,
                        make_population, neighborhood, partition)

# (id, mass, gold, weak); None abstains
pop = make_population([
    ("a", 0.2, 0, 0),
    ("b", 0.2, 0, 0),
    ("c", 0.2, 0, 1),
    ("d", 0.2, 0, None),
    ("e", 0.2, 0, None),
])
g = build_graph(pop, [("a", "c"), ("b", "c"), ("a", "d"), ("b", "e")])

parts = partition(pop)
cls = parts[0]
print("covered S:", sorted(pop.to_set(cls.S)), " uncovered T:", sorted(pop.to_set(cls.T)))
print("good:", sorted(pop.to_set(cls.good)), " bad:", sorted(pop.to_set(cls.bad)))
print("alpha =", cls.alpha)

print("N({c}) =", sorted(neighborhood(g, {"c"})))
print("P(N({c}) | S) =", conditional_prob(pop, neighborhood(g, {"c"}), cls.S))
print("w(N({a}), {a}) =", cut_weight(g, neighborhood(g, {"a"}), {"a"}))
print("degree mass:", np.round(g.degree_mass(), 3))
print("weak-label error on S:", disagreement(pop, "weak", "gold", cls.S))
