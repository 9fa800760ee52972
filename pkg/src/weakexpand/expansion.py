"""Expansion of set families: exact, robust, and finite-sample estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Callable, Sequence

import numpy as np

from .errors import (EmpiricalEstimateError, GraphError, LearnerError, NoQualifyingSetError,
                     ParameterError, UndefinedConditionalError)
from .graph import ExampleGraph, _robust_size
from .population import LabelAssignment, Population
from .robustness import robust_mask

MISTAKES = "mistakes"
NON_MISTAKES = "non_mistakes"


@dataclass(frozen=True, eq=False)
class SetFamily:
    name: str
    members: tuple  # of frozensets
    base: frozenset
    provenance: dict = field(default_factory=lambda: {"kind": "explicit"})
    masks: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for U in self.members:
            if not U <= self.base:
                raise ValueError(f"family member not contained in base set of {self.name!r}")

    def __len__(self):
        return len(self.members)

    def as_masks(self, pop: Population) -> np.ndarray:
        if self.masks is not None:
            return self.masks
        if not self.members:
            return np.zeros((0, len(pop)), dtype=bool)
        return np.stack([pop.mask(U) for U in self.members])


def family_masks(g: ExampleGraph, base: np.ndarray, label_stack: np.ndarray,
                 eta: float, kind: str) -> np.ndarray:
    """Rows R_eta(f) & B & [f != y] (mistakes) or [f == y] (non-mistakes)."""
    label_stack = np.atleast_2d(label_stack)
    rob = robust_mask(g, label_stack, eta)
    wrong = label_stack != g.pop.gold
    if kind == MISTAKES:
        sel = wrong
    elif kind == NON_MISTAKES:
        sel = ~wrong
    else:
        raise ValueError(f"unknown family kind {kind!r}")
    return rob & sel & base


def mistake_family(g: ExampleGraph, B, classifiers: Sequence, eta: float = 0.0,
                   kind: str = MISTAKES, name: str | None = None) -> SetFamily:
    """M_eta(B, F) (kind='mistakes') or M'_eta(B, F) (kind='non_mistakes')."""
    pop = g.pop
    b = pop.mask(B)
    if not classifiers:
        return SetFamily(name or kind, (), pop.to_set(b), {"kind": kind, "eta": eta})
    stack = np.stack([pop.labels_of(f) for f in classifiers])
    masks = family_masks(g, b, stack, eta, kind)
    members = tuple(pop.to_set(row) for row in masks)
    return SetFamily(name or kind, members, pop.to_set(b),
                     {"kind": kind, "eta": eta, "classifiers": len(classifiers)}, masks)


@dataclass(frozen=True)
class ExpansionEstimate:
    c: float | None
    q: float
    eta: float
    mode: str
    witness: frozenset | None = None
    lo: float | None = None
    hi: float | None = None
    trace: tuple = ()
    caveats: tuple = ()

    @property
    def qualifying(self) -> bool:
        return self.c is not None

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "q": self.q,
            "eta": self.eta,
            "mode": self.mode,
            "witness_size": 0 if self.witness is None else len(self.witness),
            "lo": self.lo,
            "hi": self.hi,
            "trace": list(self.trace),
            "caveats": list(self.caveats),
        }


def family_expansion_masks(g: ExampleGraph, members: np.ndarray, a: np.ndarray,
                           b: np.ndarray, q: float, eta: float):
    """Minimise the expansion ratio over mask rows.

    Returns (lo, hi, row index of the witness) or None when no row has
    P(U|B) > q.  For eta = 0, lo == hi.
    """
    m = g.pop.mass
    pa, pb = m[a].sum(), m[b].sum()
    if pa <= 0 or pb <= 0:
        raise UndefinedConditionalError("expansion needs P(A) > 0 and P(B) > 0")
    if members.shape[0] == 0:
        return None
    pu = members.astype(float) @ m / pb
    qual = np.flatnonzero(pu > q)
    if qual.size == 0:
        return None
    rows = members[qual]
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    upu = uniq.astype(float) @ m / pb
    if eta == 0.0:
        nb = np.asarray(g.adj @ uniq.T.astype(np.int8)) > 0  # (n, u)
        lo = (m * a) @ nb / pa / upu
        hi = lo
    else:
        lo = np.empty(len(uniq))
        hi = np.empty(len(uniq))
        for k, row in enumerate(uniq):
            l, h, _, _ = _robust_size(g, row, a, pa, eta)
            lo[k], hi[k] = l / upu[k], h / upu[k]
    best = int(np.argmin(lo))
    witness_row = int(qual[np.flatnonzero(inverse == best)[0]])
    return float(lo[best]), float(hi.min()), witness_row


def exact_expansion(g: ExampleGraph, family: SetFamily, A, B, q: float = 0.0,
                    eta: float = 0.0) -> ExpansionEstimate:
    """min over members U with P(U|B) > q of P_{1-eta}(U, A) / P(U|B)."""
    pop = g.pop
    if not 0.0 <= eta < 1.0:
        raise ParameterError(f"eta={eta!r} outside [0, 1)")
    a, b = pop.mask(A), pop.mask(B)
    masks = family.as_masks(pop)
    res = family_expansion_masks(g, masks, a, b, q, eta)
    mode = "exact" if eta == 0.0 else "robust-bracket"
    if res is None:
        return ExpansionEstimate(None, q, eta, mode)
    lo, hi, row = res
    return ExpansionEstimate(lo, q, eta, mode, pop.to_set(masks[row]), lo, hi)


@dataclass(frozen=True)
class OracleSample:
    sample_a: tuple
    sample_b: tuple
    oracle: dict  # sampled A id -> B id

    def __post_init__(self):
        missing = [x for x in self.sample_a if x not in self.oracle]
        if missing:
            raise EmpiricalEstimateError(f"no oracle target for sampled point {missing[0]!r}")

    @property
    def n_a(self) -> int:
        return len(self.sample_a)

    @property
    def n_b(self) -> int:
        return len(self.sample_b)

    def check_edges(self, g: ExampleGraph) -> None:
        for src in set(self.sample_a):
            dst = self.oracle[src]
            if dst not in g.neighbors(src):
                raise GraphError(f"oracle pair ({src!r}, {dst!r}) is not an edge")


def load_oracle_pairs(source: IO | str) -> dict:
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return load_oracle_pairs(fh)
    pairs = {}
    for lineno, line in enumerate(source, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise EmpiricalEstimateError(f"line {lineno}: expected source<TAB>target")
        pairs[parts[0]] = parts[1]
    return pairs


def load_sample(source: IO | str) -> list:
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return load_sample(fh)
    out = []
    for line in source:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def default_epsilon(n_b: int, delta: float = 0.1) -> float:
    """One-sided Hoeffding radius sqrt(ln(2/delta) / (2 n_B))."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n_b))


def empirical_expansion(oracle: OracleSample, U, q: float = 0.0,
                        epsilon: float = 0.0) -> float | None:
    """Plug-in ratio of oracle hits in U over B-sample hits in U.

    Returns None when the empirical size of U falls below q - epsilon or U
    is absent from both samples.
    """
    if oracle.n_a == 0 or oracle.n_b == 0:
        raise EmpiricalEstimateError("empty sample")
    U = frozenset(U)
    num = sum(oracle.oracle[x] in U for x in oracle.sample_a) / oracle.n_a
    den = sum(x in U for x in oracle.sample_b) / oracle.n_b
    if den < q - epsilon:
        return None
    if den == 0 and num == 0:
        return None  # U unseen in both samples: nothing to measure
    if den == 0:
        raise EmpiricalEstimateError(
            f"zero B-sample hits in U (numerator {num:.6g}); ratio undefined")
    return num / den


def _draw_rng(seed: int, draw: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(draw,)))


def heuristic_min_expansion(pop: Population, train_pool: Sequence, learner: Callable,
                            oracle: OracleSample, A, B, kind: str = MISTAKES, *,
                            graph: ExampleGraph | None = None, q: float = 0.0,
                            epsilon: float | None = None, eta: float = 0.0,
                            resamples: int = 5, resample_fraction: float = 0.8,
                            seed: int = 0, delta: float = 0.1,
                            check_determinism: bool = True) -> ExpansionEstimate:
    """Approximate the worst empirical expansion by retraining on random subsamples.

    Each draw trains ``learner`` on a ``resample_fraction`` subsample of
    ``train_pool`` (without replacement), forms U(f) on B, and scores it with
    the oracle sample.  Without a graph, robustness cannot be evaluated and
    U(f) is the plain (eta = 0, all-robust) mistake or non-mistake set.
    """
    if resamples < 1:
        raise ParameterError("resamples must be >= 1")
    if not 0.0 < resample_fraction <= 1.0:
        raise ParameterError("resample_fraction must lie in (0, 1]")
    if graph is None and eta != 0.0:
        raise ParameterError("eta > 0 needs the example graph")
    pool = list(train_pool)
    if not pool:
        raise ParameterError("empty training pool")
    a_set = pop.to_set(pop.mask(A))
    stray = [x for x in oracle.sample_a if x not in a_set]
    if stray:
        raise EmpiricalEstimateError(f"oracle source {stray[0]!r} is not in A")
    if epsilon is None:
        epsilon = default_epsilon(oracle.n_b, delta)
    b = pop.mask(B)
    size = max(1, int(round(resample_fraction * len(pool))))
    trace = []
    caveats = []
    best = None
    for draw in range(resamples):
        rng = _draw_rng(seed, draw)
        idx = rng.choice(len(pool), size=size, replace=False)
        sample = [pool[i] for i in sorted(idx)]
        try:
            f = learner(sample)
        except Exception as exc:
            raise LearnerError(draw, exc) from exc
        if draw == 0 and check_determinism:
            try:
                again = learner(sample)
            except Exception as exc:
                raise LearnerError(draw, exc) from exc
            if LabelAssignment(dict(again.labels)) != LabelAssignment(dict(f.labels)):
                caveats.append("learner is not deterministic; the finite-sample guarantee is heuristic")
        labels = pop.labels_of(f)
        if graph is not None:
            row = family_masks(graph, b, labels, eta, kind)[0]
        else:
            wrong = labels != pop.gold
            row = b & (wrong if kind == MISTAKES else ~wrong)
        U = pop.to_set(row)
        c_hat = empirical_expansion(oracle, U, q, epsilon)
        trace.append({"draw": draw, "size": len(U), "c": c_hat})
        if c_hat is not None and (best is None or c_hat < best[0]):
            best = (c_hat, U)
    if best is None:
        raise NoQualifyingSetError("no draw produced a set above the q threshold")
    return ExpansionEstimate(best[0], q, eta, "empirical", best[1], best[0], best[0],
                             tuple(trace), tuple(caveats))


def generalization_margin(vc: int, n_a: int, n_b: int, q_bar: float, delta: float) -> float:
    """Uniform deviation bound for sup_U (c_hat(U) - c(U)), natural logs, unclamped."""
    if vc < 1:
        raise ParameterError("VC dimension must be >= 1")
    if q_bar <= 0:
        raise ParameterError("q_bar must be positive")
    if not 0.0 < delta <= 1.0:
        raise ParameterError("delta must lie in (0, 1]")
    if n_a < 1 or n_b < 1:
        raise ParameterError("sample sizes must be positive")
    gamma = n_b * q_bar / n_a
    m = n_a + n_b
    inner = (vc * math.log(2 * math.e * m / vc) + math.log(8.0 / delta)) / (n_a * q_bar ** 2)
    return 4.0 * (4.0 + math.sqrt(gamma)) * math.sqrt(inner)


def vc_of_mistake_family(vc_of_hypotheses: int, num_classes: int = 2) -> int:
    """VC(M) <= VC(F) for binary hypothesis classes."""
    if num_classes != 2:
        raise ParameterError("the mistake-family VC bound is only known for binary labels")
    if vc_of_hypotheses < 1:
        raise ParameterError("VC dimension must be >= 1")
    return vc_of_hypotheses
