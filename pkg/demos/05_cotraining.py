"""Co-training testbed: view-2 measurable classifiers have expansion 1."""

from weakexpand import (MISTAKES, NON_MISTAKES, HypothesisClassSpec, build_graph,
                        cotraining_population, disagreement, enumerate_hypotheses, erm_train,
                        exact_expansion, mistake_family, partition, plc_bound,
                        random_cotraining_spec, robust_set)
from weakexpand.testbeds import symmetric_cotraining_spec

spec = random_cotraining_spec(4, num_classes=2, view1_size=4, view2_size=3)
pop, edges = cotraining_population(spec)
g = build_graph(pop, edges)
hyps = enumerate_hypotheses(HypothesisClassSpec("view2-measurable"), pop)
print(f"{len(pop)} points, {g.num_edges} edges, {len(hyps)} view-2 classifiers")
print("all robust:", all(robust_set(g, f) == set(pop.ids) for f in hyps))

for cp in partition(pop).classes:
    S, T, good, bad = (pop.to_set(m) for m in (cp.S, cp.T, cp.good, cp.bad))
    c = exact_expansion(g, mistake_family(g, T, hyps, 0.0, MISTAKES), good, T).c
    c2 = exact_expansion(g, mistake_family(g, good, hyps, 0.0, NON_MISTAKES), bad, good).c
    print(f"class {cp.label}: good->T {c}, bad->good {c2}")

pop, edges = cotraining_population(symmetric_cotraining_spec(0.2))
hyps = enumerate_hypotheses(HypothesisClassSpec("view2-measurable"), pop)
f = erm_train([(x, pop.weak_label(x)) for x in pop.ids if pop.weak_label(x) is not None], hyps)
cls = partition(pop)[0]
err = disagreement(pop, f, "weak", cls.S)
print(f"ERM weak error {err:.3f}; bound with c=1:",
      round(plc_bound(1.0, 0.0, cls.alpha, err, 0.0).value, 4),
      "true error:", round(disagreement(pop, f, "gold", cls.S), 4))
