import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakexpand import (MISTAKES, NON_MISTAKES, LabelAssignment, OracleSample, SetFamily,
                        build_graph, conditional_prob, default_epsilon, empirical_expansion,
                        exact_expansion, generalization_margin, heuristic_min_expansion,
                        load_population, mistake_family, neighborhood, partition,
                        vc_of_mistake_family)
from weakexpand.errors import (EmpiricalEstimateError, GraphError, LearnerError,
                               NoQualifyingSetError, ParameterError,
                               UndefinedConditionalError)
from weakexpand.expansion import load_oracle_pairs, load_sample

from conftest import FIXTURES, random_instance
from oracles import brute_expansion


@pytest.fixture
def t1():
    pop = load_population(str(FIXTURES / "toy_t1" / "population.jsonl"))
    return build_graph(pop, [("a", "c"), ("b", "c"), ("a", "d"), ("b", "e")])


class TestFamilies:
    def test_gold_has_no_mistakes(self, t1):
        fam = mistake_family(t1, t1.pop.ids, [LabelAssignment.gold(t1.pop)])
        assert fam.members == (frozenset(),)

    def test_constant_non_mistakes(self, t1):
        S0 = t1.pop.to_set(partition(t1.pop)[0].S)
        fam = mistake_family(t1, S0, [LabelAssignment.constant(t1.pop, 0)], kind=NON_MISTAKES)
        assert fam.members == ({"a", "b", "c"},)

    def test_nonrobust_everywhere(self):
        pop, g = random_instance(np.random.default_rng(0), n=4, density=1.0)
        # alternate labels on a complete graph: every point disagrees with a neighbor
        f = LabelAssignment.from_array(pop, [0, 1, 0, 1])
        fam = mistake_family(g, pop.ids, [f], eta=0.0)
        assert fam.members == (frozenset(),)

    def test_member_outside_base(self):
        with pytest.raises(ValueError):
            SetFamily("bad", (frozenset({"x"}),), frozenset({"y"}))


class TestExactExpansion:
    def test_hand_value(self, t1):
        fam = SetFamily("g", (frozenset({"a", "b"}),), frozenset({"a", "b"}))
        est = exact_expansion(t1, fam, {"c"}, {"a", "b"}, q=0.0)
        assert est.c == 1.0 and est.mode == "exact"
        assert est.witness == {"a", "b"}

    def test_no_qualifying_set(self, t1):
        fam = SetFamily("g", (frozenset({"a"}),), frozenset({"a", "b"}))
        est = exact_expansion(t1, fam, {"c"}, {"a", "b"}, q=0.5)
        assert not est.qualifying

    def test_zero_mass_sets(self, t1):
        fam = SetFamily("g", (), frozenset())
        with pytest.raises(UndefinedConditionalError):
            exact_expansion(t1, fam, set(), {"a"})

    def test_witness_invariant(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            pop, g = random_instance(rng)
            members = tuple(pop.to_set(rng.random(len(pop)) < 0.5) for _ in range(4))
            B = frozenset().union(*members) or frozenset(pop.ids)
            fam = SetFamily("r", members, B)
            est = exact_expansion(g, fam, pop.ids, B, q=0.1)
            if est.qualifying:
                pu = conditional_prob(pop, est.witness, B)
                assert pu > 0.1
                ratio = conditional_prob(pop, neighborhood(g, est.witness), pop.ids) / pu
                assert est.c == pytest.approx(ratio)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.0, 0.2, 0.5]),
           st.sampled_from([0.0, 0.1, 0.3]))
    def test_all_subsets_match_brute_force(self, seed, eta, q):
        rng = np.random.default_rng(seed)
        pop, g = random_instance(rng, n=int(rng.integers(3, 8)))
        b = rng.random(len(pop)) < 0.6
        b[0] = True
        B = pop.to_set(b)
        members = tuple(frozenset(s) for r in range(len(B) + 1)
                        for s in itertools.combinations(sorted(B), r))
        fam = SetFamily("all", members, frozenset(B))
        est = exact_expansion(g, fam, pop.ids, B, q=q, eta=eta)
        ref = brute_expansion(g, members, pop.ids, B, q, eta)
        if ref is None:
            assert not est.qualifying
        else:
            assert est.c == pytest.approx(ref, abs=1e-9)

    def test_robust_at_zero_equals_plain(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            pop, g = random_instance(rng)
            fs = [LabelAssignment.from_array(pop, rng.integers(0, 2, len(pop))) for _ in range(5)]
            fam = mistake_family(g, pop.ids, fs, eta=0.0)
            a = exact_expansion(g, fam, pop.ids, pop.ids, eta=0.0)
            plain = brute_expansion(g, fam.members, pop.ids, pop.ids, 0.0, 0.0)
            assert (a.c is None) == (plain is None)
            if plain is not None:
                assert a.c == pytest.approx(plain, abs=1e-12)


class TestEmpirical:
    def test_full_hits(self):
        o = OracleSample(("a1", "a2"), ("b1", "b2"), {"a1": "b1", "a2": "b2"})
        assert empirical_expansion(o, {"b1", "b2"}) == 1.0

    def test_half_hits(self):
        o = OracleSample(("a1", "a2", "a3", "a4"), ("b1", "b2", "b3", "b4"),
                         {"a1": "b1", "a2": "b2", "a3": "b3", "a4": "b4"})
        assert empirical_expansion(o, {"b1", "b2"}) == 1.0
        assert empirical_expansion(o, {"b1"}, q=0.5, epsilon=0.1) is None

    def test_zero_denominator(self):
        o = OracleSample(("a1",), ("b1",), {"a1": "b2"})
        with pytest.raises(EmpiricalEstimateError, match="zero"):
            empirical_expansion(o, {"b2"})

    def test_missing_oracle_target(self):
        with pytest.raises(EmpiricalEstimateError):
            OracleSample(("a1",), ("b1",), {})

    def test_population_sample_is_consistent(self):
        # uniform population, every point listed once
        rng = np.random.default_rng(2)
        pop, g = random_instance(rng, n=8, density=0.8)
        pop_ids = list(pop.ids)
        A, B = pop_ids[:4], pop_ids[4:]
        oracle = {}
        for x in A:
            nb = sorted(set(g.neighbors(x)) & set(B))
            oracle[x] = nb[0] if nb else B[0]
        o = OracleSample(tuple(A), tuple(B), oracle)
        U = set(B[:2])
        num = sum(oracle[x] in U for x in A) / len(A)
        assert empirical_expansion(o, U) == pytest.approx(num / 0.5)

    def test_oracle_edges_checked(self, t1):
        OracleSample(("c",), ("a",), {"c": "a"}).check_edges(t1)
        with pytest.raises(GraphError):
            OracleSample(("c",), ("d",), {"c": "d"}).check_edges(t1)

    def test_oracle_numerator_below_neighborhood_mass(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            pop, g = random_instance(rng, density=0.6)
            ids = list(pop.ids)
            A = [x for x in ids if g.neighbors(x)]
            if not A:
                continue
            oracle = {x: sorted(g.neighbors(x))[int(rng.integers(len(g.neighbors(x))))]
                      for x in A}
            U = set(pop.to_set(rng.random(len(pop)) < 0.5))
            a = pop.mask(A)
            hit = pop.mask([x for x in A if oracle[x] in U])
            p_oracle = pop.mass[hit].sum() / pop.mass[a].sum()
            assert p_oracle <= conditional_prob(pop, neighborhood(g, U), A) + 1e-12

    def test_file_loaders(self):
        assert load_oracle_pairs(io.StringIO("# x\na\tb\n")) == {"a": "b"}
        assert load_sample(io.StringIO("a\n\nb\n")) == ["a", "b"]
        with pytest.raises(EmpiricalEstimateError):
            load_oracle_pairs(io.StringIO("a b\n"))

    def test_default_epsilon(self):
        assert default_epsilon(100, 0.1) == pytest.approx(math.sqrt(math.log(20) / 200))


class TestHeuristic:
    def setup_method(self):
        pop = load_population(str(FIXTURES / "toy_t1" / "population.jsonl"))
        self.pop = pop
        self.S0 = set(pop.to_set(partition(pop)[0].S))
        self.oracle = OracleSample(("c",), ("a", "b"), {"c": "a"})

    def test_gold_learner_has_no_mistakes(self):
        gold = LabelAssignment.gold(self.pop)
        with pytest.raises(NoQualifyingSetError):
            heuristic_min_expansion(self.pop, ["a", "b", "c"], lambda s: gold, self.oracle,
                                    {"c"}, {"a", "b"}, MISTAKES, q=0.0, epsilon=0.0)

    def test_fixed_learner(self):
        f = LabelAssignment.constant(self.pop, 0)
        est = heuristic_min_expansion(self.pop, ["a", "b", "c"], lambda s: f, self.oracle,
                                      {"c"}, {"a", "b"}, NON_MISTAKES, q=0.0, epsilon=0.0)
        assert est.c == empirical_expansion(self.oracle, {"a", "b"})
        assert len(est.trace) == 5 and est.mode == "empirical"

    def test_two_hypothesis_minimum(self):
        f1 = LabelAssignment(dict(a=0, b=0, c=0, d=0, e=0))
        f2 = LabelAssignment(dict(a=0, b=1, c=0, d=0, e=0))
        learner = lambda s: f1 if "a" in s else f2
        est = heuristic_min_expansion(self.pop, ["a", "b", "c"], learner, self.oracle,
                                      {"c"}, {"a", "b"}, NON_MISTAKES, q=0.0, epsilon=0.0,
                                      resamples=20, resample_fraction=0.34, seed=1)
        used = {d["c"] for d in est.trace}
        per_h = {empirical_expansion(self.oracle, {"a", "b"}),
                 empirical_expansion(self.oracle, {"a"})}
        assert used <= per_h
        assert est.c == min(used)

    def test_reproducible_and_prefix_stable(self):
        f1 = LabelAssignment(dict(a=0, b=0, c=0, d=0, e=0))
        f2 = LabelAssignment(dict(a=0, b=1, c=0, d=0, e=0))
        learner = lambda s: f1 if "a" in s else f2
        kw = dict(q=0.0, epsilon=0.0, resample_fraction=0.34, seed=4)
        r5 = heuristic_min_expansion(self.pop, ["a", "b", "c"], learner, self.oracle,
                                     {"c"}, {"a", "b"}, NON_MISTAKES, resamples=5, **kw)
        r8 = heuristic_min_expansion(self.pop, ["a", "b", "c"], learner, self.oracle,
                                     {"c"}, {"a", "b"}, NON_MISTAKES, resamples=8, **kw)
        assert r8.trace[:5] == r5.trace

    def test_learner_failure_reports_draw(self):
        def boom(sample):
            raise RuntimeError("nope")
        with pytest.raises(LearnerError) as info:
            heuristic_min_expansion(self.pop, ["a", "b"], boom, self.oracle, {"c"},
                                    {"a", "b"})
        assert info.value.draw == 0

    def test_stochastic_learner_caveat(self):
        rng = np.random.default_rng(0)
        fs = [LabelAssignment.constant(self.pop, 0),
              LabelAssignment(dict(a=0, b=1, c=0, d=0, e=0))]
        learner = lambda s: fs[int(rng.integers(2))]
        flagged = False
        for _ in range(10):
            est = heuristic_min_expansion(self.pop, ["a", "b", "c"], learner, self.oracle,
                                          {"c"}, {"a", "b"}, NON_MISTAKES, q=0.0,
                                          epsilon=0.0)
            flagged |= bool(est.caveats)
        assert flagged

    def test_parameter_checks(self):
        f = LabelAssignment.constant(self.pop, 0)
        with pytest.raises(ParameterError):
            heuristic_min_expansion(self.pop, ["a"], lambda s: f, self.oracle, {"c"},
                                    {"a", "b"}, resamples=0)
        with pytest.raises(ParameterError):
            heuristic_min_expansion(self.pop, ["a"], lambda s: f, self.oracle, {"c"},
                                    {"a", "b"}, resample_fraction=0.0)


class TestMargin:
    def test_spot_value(self):
        # 4(4+sqrt(0.1)) * sqrt((2 ln(2e*2000/2) + ln 160) / (1000 * 0.01))
        inner = (2 * math.log(2 * math.e * 1000) + math.log(160)) / 10.0
        ref = 4 * (4 + math.sqrt(0.1)) * math.sqrt(inner)
        val = generalization_margin(2, 1000, 1000, 0.1, 0.05)
        assert val == pytest.approx(ref)
        assert val == pytest.approx(25.77, abs=0.01)

    def test_monotone_in_delta(self):
        assert generalization_margin(2, 1000, 1000, 0.1, 0.5) < \
            generalization_margin(2, 1000, 1000, 0.1, 0.05)

    def test_scaling(self):
        small = generalization_margin(3, 1000, 1000, 0.2, 0.1)
        big = generalization_margin(3, 100000, 100000, 0.2, 0.1)
        assert small / big == pytest.approx(10, rel=0.5)
        # with the log term factored out the ratio is exactly 10
        def core(n):
            return math.sqrt((3 * math.log(2 * math.e * 2 * n / 3) + math.log(80)))
        assert (small / core(1000)) / (big / core(100000)) == pytest.approx(10, rel=0.05)

    def test_errors(self):
        with pytest.raises(ParameterError):
            generalization_margin(0, 10, 10, 0.1, 0.1)
        with pytest.raises(ParameterError):
            generalization_margin(1, 10, 10, 0.0, 0.1)

    def test_vc_pass_through(self):
        assert vc_of_mistake_family(3) == 3
        assert vc_of_mistake_family(1) == 1
        with pytest.raises(ParameterError):
            vc_of_mistake_family(2, num_classes=3)
