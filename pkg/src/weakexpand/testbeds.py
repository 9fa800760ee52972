"""Synthetic populations, enumerable hypothesis classes, ERM, and the
brute-force soundness harness for the bounds."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import bounds as bd
from .errors import EnumerationLimitError, ParameterError, WeakExpandError
from .expansion import MISTAKES, NON_MISTAKES, family_expansion_masks, family_masks
from .graph import ExampleGraph, build_graph
from .population import LabelAssignment, Population, make_population, partition
from .robustness import robust_mask

MAX_HYPOTHESES = 2 ** 20
SPEC_TOL = 1e-9
# shrink factor turning a measured minimum ratio into a strict expansion constant
C_SHRINK = 1.0 - 1e-9
VIOLATION_TOL = 1e-9

VERIFIABLE = (bd.PLC_MAIN, bd.COVERAGE_MAIN, bd.COVERAGE_WEAK, bd.WEI_PLC)


def _rng(seed, stream=0):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


# ---------------------------------------------------------------- co-training

@dataclass(frozen=True)
class CoTrainingSpec:
    """Two-view population: x = (x1, x2) with x1, x2 independent given the class.

    ``cond1[i]`` and ``cond2[i]`` are the view conditionals of class i and
    ``teacher[v]`` is the weak label for x1 = v (None abstains).
    """
    priors: tuple
    cond1: tuple
    cond2: tuple
    teacher: tuple

    def __post_init__(self):
        k = len(self.priors)
        if k < 2:
            raise ParameterError("need at least two classes")
        if len(self.cond1) != k or len(self.cond2) != k:
            raise ParameterError("one view conditional per class is required")
        for name, dists in (("priors", [self.priors]), ("cond1", self.cond1),
                            ("cond2", self.cond2)):
            for d in dists:
                d = np.asarray(d, dtype=float)
                if np.any(d < 0) or abs(d.sum() - 1.0) > SPEC_TOL:
                    raise ParameterError(f"{name} entry {d.tolist()} is not a distribution")
        if len({len(d) for d in self.cond1}) != 1 or len({len(d) for d in self.cond2}) != 1:
            raise ParameterError("view conditionals must share a support size")
        if len(self.teacher) != self.view1_size:
            raise ParameterError("teacher must label every view-1 value")
        for t in self.teacher:
            if t is not None and not 0 <= t < k:
                raise ParameterError(f"teacher label {t!r} out of range")

    @property
    def num_classes(self) -> int:
        return len(self.priors)

    @property
    def view1_size(self) -> int:
        return len(self.cond1[0])

    @property
    def view2_size(self) -> int:
        return len(self.cond2[0])


def cotraining_id(label: int, x1: int, x2: int) -> str:
    return f"y{label}-a{x1}-b{x2}"


_VIEW2 = re.compile(r"-b(\d+)$")


def view2_of(pid: str) -> int:
    m = _VIEW2.search(pid)
    if m is None:
        raise ParameterError(f"point id {pid!r} carries no view-2 value")
    return int(m.group(1))


def cotraining_population(spec: CoTrainingSpec) -> tuple[Population, list]:
    """Product-space population; neighbors are the points sharing x2."""
    rows = []
    for i, prior in enumerate(spec.priors):
        for x1, p1 in enumerate(spec.cond1[i]):
            for x2, p2 in enumerate(spec.cond2[i]):
                m = prior * p1 * p2
                if m > 0:
                    rows.append((cotraining_id(i, x1, x2), m, i, spec.teacher[x1]))
    pop = make_population(rows, spec.num_classes)
    by_x2 = {}
    for pid in pop.ids:
        by_x2.setdefault(view2_of(pid), []).append(pid)
    edges = []
    for x2 in sorted(by_x2):
        edges.extend(itertools.combinations(by_x2[x2], 2))
    return pop, edges


def random_cotraining_spec(seed, num_classes: int = 2, view1_size: int = 4,
                           view2_size: int = 3) -> CoTrainingSpec:
    """Random spec with full-support conditionals and a teacher that emits
    every class and abstains somewhere, so S_i^good, S_i^bad and T_i are all
    nonempty for every class."""
    if view1_size < num_classes + 1:
        raise ParameterError("view1_size must exceed num_classes")
    rng = _rng(seed)
    teacher = [None] + list(range(num_classes))
    teacher += [int(t) if t < num_classes else None
                for t in rng.integers(0, num_classes + 1, view1_size - len(teacher))]
    teacher = [teacher[j] for j in rng.permutation(view1_size)]
    priors = rng.dirichlet(np.ones(num_classes))
    cond1 = []
    for i in range(num_classes):
        # put extra weight on the x1 values the teacher maps to i, so alpha_i < 1/2 is typical
        conc = np.array([3.0 if t == i else 1.0 for t in teacher])
        cond1.append(rng.dirichlet(conc))
    cond2 = [rng.dirichlet(np.ones(view2_size)) for _ in range(num_classes)]
    return CoTrainingSpec(tuple(priors.tolist()), tuple(tuple(c.tolist()) for c in cond1),
                          tuple(tuple(c.tolist()) for c in cond2), tuple(teacher))


def symmetric_cotraining_spec(alpha: float) -> CoTrainingSpec:
    """2x2 views with symmetric teacher noise alpha and a perfectly informative view 2."""
    if not 0.0 <= alpha < 0.5:
        raise ParameterError("alpha must lie in [0, 1/2)")
    return CoTrainingSpec((0.5, 0.5), ((1 - alpha, alpha), (alpha, 1 - alpha)),
                          ((1.0, 0.0), (0.0, 1.0)), (0, 1))


# ---------------------------------------------------------------- planted

def planted_population(n_points: int, num_classes: int = 2, alpha_targets=0.2,
                       coverage_target: float = 0.5, edge_density: float = 0.3,
                       seed: int = 0, cross_class: bool = False,
                       masses: str = "uniform") -> tuple[Population, list]:
    """Random population with planted pseudolabel noise and random edges.

    Edges are drawn independently with probability ``edge_density`` among
    same-class pairs (all pairs with ``cross_class``).  Realized alpha_i is
    the closest the point masses allow to the target.
    """
    k = num_classes
    if n_points < k or k < 2:
        raise ParameterError("need n_points >= num_classes >= 2")
    alphas = np.broadcast_to(np.asarray(alpha_targets, dtype=float), (k,))
    if np.any(alphas < 0) or np.any(alphas >= 0.5):
        raise ParameterError("alpha targets must lie in [0, 1/2)")
    if not 0.0 <= coverage_target <= 1.0:
        raise ParameterError("coverage_target must lie in [0, 1]")
    if coverage_target == 0.0 and np.any(alphas > 0):
        raise ParameterError("nonzero alpha target needs covered points")
    if not 0.0 <= edge_density <= 1.0:
        raise ParameterError("edge_density must lie in [0, 1]")
    rng = _rng(seed)
    gold = rng.permutation(np.arange(n_points) % k)
    if masses == "uniform":
        mass = np.full(n_points, 1.0 / n_points)
    elif masses == "dirichlet":
        mass = rng.dirichlet(np.ones(n_points))
    else:
        raise ParameterError(f"unknown mass scheme {masses!r}")
    weak = np.full(n_points, -1)
    for i in range(k):
        members = rng.permutation(np.flatnonzero(gold == i))
        covered = _greedy_subset(members, mass, coverage_target * mass[members].sum())
        bad = _greedy_subset(rng.permutation(covered), mass,
                             alphas[i] * mass[covered].sum())
        weak[covered] = i
        for j in bad:
            weak[j] = (i + 1 + rng.integers(0, k - 1)) % k
    ids = [f"x{j:02d}" for j in range(n_points)]
    rows = [(ids[j], float(mass[j]), int(gold[j]), None if weak[j] < 0 else int(weak[j]))
            for j in range(n_points)]
    pop = make_population(rows, k)
    pairs = [(a, b) for a, b in itertools.combinations(range(n_points), 2)
             if cross_class or gold[a] == gold[b]]
    keep = rng.random(len(pairs)) < edge_density
    edges = [(ids[a], ids[b]) for (a, b), kk in zip(pairs, keep) if kk]
    return pop, edges


def _greedy_subset(order, mass, target):
    """Walk ``order`` and keep a point whenever it moves the kept mass closer to target."""
    kept, acc = [], 0.0
    for j in order:
        if abs(acc + mass[j] - target) < abs(acc - target):
            kept.append(int(j))
            acc += mass[j]
    return np.asarray(kept, dtype=int)


# ---------------------------------------------------------------- hypotheses

@dataclass(frozen=True)
class HypothesisClassSpec:
    """kind: all-dichotomies | thresholds-1d | view2-measurable | explicit-list.

    params: thresholds-1d takes ``order`` (ids, ascending) and optional
    ``flips``; view2-measurable takes an optional ``view2`` id -> value map
    (default: parsed from co-training ids); explicit-list takes ``hypotheses``.
    """
    kind: str
    params: Mapping = field(default_factory=dict)


def hypothesis_matrix(spec: HypothesisClassSpec, pop: Population) -> np.ndarray:
    """All hypotheses as an (h, n) label array in population order."""
    k, n = pop.num_classes, len(pop)
    kind = spec.kind
    if kind == "all-dichotomies":
        count = k ** n
        if count > MAX_HYPOTHESES:
            raise EnumerationLimitError(f"{k}^{n} labelings exceed the 2^20 cap")
        codes = np.arange(count)
        # lexicographic: first point is the most significant digit
        powers = k ** np.arange(n - 1, -1, -1)
        return (codes[:, None] // powers[None, :]) % k
    if kind == "thresholds-1d":
        order = list(spec.params.get("order", pop.ids))
        if sorted(order) != sorted(pop.ids):
            raise ParameterError("threshold order must list every point once")
        lo, hi = spec.params.get("labels", (0, 1))
        rank = np.empty(n, dtype=int)
        for r, pid in enumerate(order):
            rank[pop.index[pid]] = r
        t = np.arange(n + 1)
        out = np.where(rank[None, :] >= t[:, None], hi, lo)
        if spec.params.get("flips", False):
            out = np.concatenate([out, np.where(out == hi, lo, hi)])
        return out
    if kind == "view2-measurable":
        v2map = spec.params.get("view2")
        v2 = np.array([v2map[p] if v2map is not None else view2_of(p) for p in pop.ids])
        values, inv = np.unique(v2, return_inverse=True)
        count = k ** len(values)
        if count > MAX_HYPOTHESES:
            raise EnumerationLimitError(f"{k}^{len(values)} view-2 maps exceed the 2^20 cap")
        codes = np.arange(count)
        powers = k ** np.arange(len(values) - 1, -1, -1)
        per_value = (codes[:, None] // powers[None, :]) % k
        return per_value[:, inv]
    if kind == "explicit-list":
        hyps = spec.params.get("hypotheses", ())
        if len(hyps) > MAX_HYPOTHESES:
            raise EnumerationLimitError("explicit list exceeds the 2^20 cap")
        if not hyps:
            return np.zeros((0, n), dtype=int)
        return np.stack([pop.labels_of(f) for f in hyps])
    raise ParameterError(f"unknown hypothesis class {kind!r}")


def enumerate_hypotheses(spec: HypothesisClassSpec, pop: Population) -> list:
    return [LabelAssignment.from_array(pop, row) for row in hypothesis_matrix(spec, pop)]


def erm_train(sample: Sequence, hypotheses: Sequence, weights: Sequence | None = None):
    """Hypothesis with least (weighted) disagreement with the sample's weak labels.

    ``sample`` holds (id, weak label) pairs; abstaining entries are ignored.
    Ties go to the lowest index.
    """
    if not sample or not hypotheses:
        raise ParameterError("ERM needs a nonempty sample and hypothesis list")
    if weights is None:
        weights = [1.0] * len(sample)
    losses = np.zeros(len(hypotheses))
    for (pid, lab), w in zip(sample, weights):
        if lab is None:
            continue
        losses += w * np.fromiter((h[pid] != lab for h in hypotheses), dtype=float,
                                  count=len(hypotheses))
    return hypotheses[int(np.argmin(losses))]


# ---------------------------------------------------------------- harness

@dataclass
class VerificationReport:
    theorem: str
    instances: int = 0
    applicable: int = 0
    vacuous: int = 0
    skipped: int = 0
    violations: list = field(default_factory=list)
    max_slack: float | None = None
    min_slack: float | None = None

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        if other.theorem != self.theorem:
            raise ValueError("cannot merge reports of different theorems")
        out = VerificationReport(self.theorem, self.instances + other.instances,
                                 self.applicable + other.applicable,
                                 self.vacuous + other.vacuous, self.skipped + other.skipped,
                                 self.violations + other.violations)
        slacks = [s for s in (self.max_slack, other.max_slack) if s is not None]
        out.max_slack = max(slacks) if slacks else None
        slacks = [s for s in (self.min_slack, other.min_slack) if s is not None]
        out.min_slack = min(slacks) if slacks else None
        return out

    def _slack(self, s):
        self.max_slack = s if self.max_slack is None else max(self.max_slack, s)
        self.min_slack = s if self.min_slack is None else min(self.min_slack, s)

    def to_dict(self) -> dict:
        return {"theorem": self.theorem, "instances": self.instances,
                "applicable": self.applicable, "vacuous": self.vacuous,
                "skipped": self.skipped, "violations": list(self.violations),
                "max_slack": self.max_slack, "min_slack": self.min_slack}


def _expansion_constant(g, fam, a, b, q, eta):
    """Largest usable c for the family on (A, B), or None when it is 0.

    A family with no set above q expands vacuously; c is capped at 1 since
    any smaller constant is also valid, then shrunk to make it strict.
    """
    res = family_expansion_masks(g, fam, a, b, q, eta)
    c = 1.0 if res is None else min(res[0], 1.0)
    c *= C_SHRINK
    return c if c > 0 else None


def verify_theorem(pop: Population, edges, hypotheses, theorem: str, eta: float = 0.0,
                   q: float = 0.0, classes: Sequence | None = None,
                   mutate: float = 0.0) -> VerificationReport:
    """Check a bound against the true error of every hypothesis in the class.

    The expansion constant is measured exactly on the family induced by the
    whole class, and each hypothesis with an applicable bound must satisfy
    err(f, y | target) <= bound - mutate.
    """
    if theorem not in VERIFIABLE:
        raise ParameterError(f"theorem {theorem!r} has no soundness harness")
    g = edges if isinstance(edges, ExampleGraph) else build_graph(pop, edges)
    if isinstance(hypotheses, np.ndarray):
        H = np.atleast_2d(hypotheses)
    elif isinstance(hypotheses, HypothesisClassSpec):
        H = hypothesis_matrix(hypotheses, pop)
    else:
        H = np.stack([pop.labels_of(f) for f in hypotheses])
    m = pop.mass
    part = partition(pop)
    rob = robust_mask(g, H, eta)
    wrong_y = H != pop.gold
    off_weak = H != pop.weak
    rep = VerificationReport(theorem)
    for i in (range(pop.num_classes) if classes is None else classes):
        cp = part[i]
        target = cp.S if theorem in (bd.PLC_MAIN, bd.WEI_PLC) else cp.T
        pS, pT = m[cp.S].sum(), m[cp.T].sum()
        ok = cp.usable() and m[cp.good].sum() > 0 and m[target].sum() > 0
        if theorem in (bd.COVERAGE_MAIN, bd.COVERAGE_WEAK):
            ok = ok and pT > 0
        if not ok:
            rep.skipped += 1
            continue
        alpha = cp.alpha
        if theorem == bd.PLC_MAIN:
            fam = family_masks(g, cp.good, H, eta, NON_MISTAKES)
            cs = (_expansion_constant(g, fam, cp.bad, cp.good, q, eta),)
        elif theorem == bd.WEI_PLC:
            fam = family_masks(g, cp.bad, H, eta, MISTAKES)
            cs = (_expansion_constant(g, fam, cp.good, cp.bad, q, eta),)
        elif theorem == bd.COVERAGE_WEAK:
            fam = family_masks(g, cp.T, H, eta, MISTAKES)
            cs = (_expansion_constant(g, fam, cp.good, cp.T, q, eta),)
        else:
            fam1 = family_masks(g, cp.T, H, eta, MISTAKES)
            fam2 = family_masks(g, cp.T, H, eta, NON_MISTAKES)
            cs = (_expansion_constant(g, fam1, cp.good, cp.T, q, eta),
                  _expansion_constant(g, fam2, cp.bad, cp.T, q, eta))
        err_w = (off_weak & cp.S) @ m / pS
        joint = ((off_weak | ~rob) & cp.S) @ m / pS
        if target is cp.S:
            nr = (~rob & cp.S) @ m / pS
            true = (wrong_y & cp.S) @ m / pS
        else:
            nr = (~rob & cp.T) @ m / pT
            true = (wrong_y & cp.T) @ m / pT
        rep.instances += len(H)
        if any(c is None for c in cs):
            continue
        # the bound depends on a hypothesis only through (err_w, nr, joint)
        keys = np.stack([err_w, nr, joint], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = np.asarray(inv).ravel()
        worst = np.full(len(uniq), -np.inf)
        np.maximum.at(worst, inv, true)
        counts = np.bincount(inv, minlength=len(uniq))
        for u, (e, r, j) in enumerate(uniq):
            report = _evaluate(theorem, cs, q, alpha, float(e), float(r), float(j))
            if report is None or not report.applicable:
                continue
            rep.applicable += int(counts[u])
            value = report.value - mutate
            if report.value >= 1.0:
                rep.vacuous += int(counts[u])
            rep._slack(float(value - worst[u]))
            if worst[u] > value + VIOLATION_TOL:
                f_idx = int(np.flatnonzero((inv == u) & (true == worst[u]))[0])
                rep.violations.append({
                    "class": int(i), "hypothesis": f_idx, "true_error": float(worst[u]),
                    "bound": float(value), "inputs": report.inputs,
                })
    return rep


def _evaluate(theorem, cs, q, alpha, err_w, nr, joint):
    try:
        if theorem == bd.PLC_MAIN:
            return bd.plc_bound(cs[0], q, alpha, err_w, nr, gate="main", joint_mass=joint)
        if theorem == bd.WEI_PLC:
            return bd.wei_plc_bound(cs[0], q, alpha, err_w, nr, joint_mass=joint)
        if theorem == bd.COVERAGE_WEAK:
            return bd.coverage_bound_weak(cs[0], q, alpha, err_w, nr)
        return bd.coverage_bound(cs[0], cs[1], q, alpha, err_w, nr)
    except WeakExpandError:
        return None


@dataclass(frozen=True)
class SuiteConfig:
    instances: int = 1000
    seed: int = 0
    n_min: int = 5
    n_max: int = 10
    etas: tuple = (0.0, 0.2, 0.5)
    qs: tuple = (0.0, 0.1, 0.25)
    cross_class_rate: float = 0.3
    threshold_rate: float = 0.2

    def __post_init__(self):
        if self.n_max > 16:
            raise EnumerationLimitError("suite instances are limited to 16 points")
        if not 2 <= self.n_min <= self.n_max:
            raise ParameterError("need 2 <= n_min <= n_max")


def random_instance(seed: int, draw: int, cfg: SuiteConfig = SuiteConfig()):
    """One random (population, edges, hypothesis class, eta, q) for the suite."""
    rng = _rng(seed, draw)
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    pop, edges = planted_population(
        n, 2, alpha_targets=rng.uniform(0.05, 0.45, 2),
        coverage_target=float(rng.uniform(0.3, 0.9)),
        edge_density=float(rng.uniform(0.2, 0.9)),
        seed=int(rng.integers(2 ** 31)),
        cross_class=bool(rng.random() < cfg.cross_class_rate),
        masses="dirichlet" if rng.random() < 0.5 else "uniform")
    if rng.random() < cfg.threshold_rate:
        order = [pop.ids[j] for j in rng.permutation(n)]
        hyp = HypothesisClassSpec("thresholds-1d", {"order": order, "flips": True})
    else:
        hyp = HypothesisClassSpec("all-dichotomies")
    eta = float(cfg.etas[int(rng.integers(len(cfg.etas)))])
    q = float(cfg.qs[int(rng.integers(len(cfg.qs)))])
    return pop, edges, hyp, eta, q


def verify_suite(theorem: str, cfg: SuiteConfig = SuiteConfig(),
                 mutate: float = 0.0) -> VerificationReport:
    """Run verify_theorem over cfg.instances random planted instances."""
    total = VerificationReport(theorem)
    for draw in range(cfg.instances):
        pop, edges, hyp, eta, q = random_instance(cfg.seed, draw, cfg)
        rep = verify_theorem(pop, edges, hyp, theorem, eta=eta, q=q, mutate=mutate)
        for v in rep.violations:
            v["draw"] = draw
            v["eta"] = eta
            v["q"] = q
        total = total.merge(rep)
    return total
