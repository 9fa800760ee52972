"""Pointwise and average-case robustness of a classifier over the example graph.

Isolated points (no positive-mass neighbor) have undefined robustness. They
are treated as robust for every eta and left out of average robustness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IsolatedPointError, ParameterError, UndefinedConditionalError
from .graph import ExampleGraph


@dataclass(frozen=True)
class RobustnessProfile:
    r: dict  # id -> fraction; isolated points absent
    isolated: frozenset

    def to_dict(self):
        return {"r": {k: float(v) for k, v in sorted(self.r.items())},
                "isolated": sorted(self.isolated)}


def robustness_matrix(g: ExampleGraph, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised r(f, x) for a stack of label arrays.

    ``labels`` has shape (h, n) or (n,).  Returns (r, isolated) where r has the
    same shape as ``labels`` (NaN at isolated points).
    """
    lab = np.atleast_2d(labels)
    m = g.pop.mass
    deg = g.degree_mass()
    isolated = deg <= 0
    same = np.zeros(lab.shape, dtype=float)
    for j in np.unique(lab):
        onj = lab == j
        # (h, n): mass of neighbours labelled j, kept where the point itself is j
        s = np.asarray((g.adj @ (onj * m).T).T)
        same += np.where(onj, s, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(isolated, np.nan, 1.0 - same / np.where(isolated, 1.0, deg))
    r = np.clip(r, 0.0, 1.0)
    if labels.ndim == 1:
        r = r[0]
    return r, isolated


def robustness_profile(g: ExampleGraph, f) -> RobustnessProfile:
    r, iso = robustness_matrix(g, g.pop.labels_of(f))
    ids = g.pop.ids
    return RobustnessProfile({ids[i]: float(r[i]) for i in np.flatnonzero(~iso)},
                             frozenset(ids[i] for i in np.flatnonzero(iso)))


def pointwise_robustness(g: ExampleGraph, f, x) -> float:
    """r(f, x): mass fraction of x's neighbors that f labels differently from x."""
    pop = g.pop
    i = pop.index[x]
    row = g.adj.indices[g.adj.indptr[i]:g.adj.indptr[i + 1]]
    nbr_mass = pop.mass[row]
    total = nbr_mass.sum()
    if total <= 0:
        raise IsolatedPointError(f"point {x!r} has no positive-mass neighbor")
    labels = pop.labels_of(f)
    return float(nbr_mass[labels[row] != labels[i]].sum() / total)


def robust_mask(g: ExampleGraph, labels: np.ndarray, eta: float) -> np.ndarray:
    r, iso = robustness_matrix(g, labels)
    return iso | (r <= eta + 1e-12)


def robust_set(g: ExampleGraph, f, eta: float = 0.0) -> frozenset:
    """R_eta(f) = {x : r(f, x) <= eta}, isolated points included."""
    return g.pop.to_set(robust_mask(g, g.pop.labels_of(f), eta))


def average_robustness(g: ExampleGraph, f, A) -> float:
    """E_{x ~ P(.|A)} r(f, x); every positive-mass point of A must have neighbors."""
    pop = g.pop
    a = pop.mask(A)
    pa = pop.mass[a].sum()
    if pa <= 0:
        raise UndefinedConditionalError("P(A) = 0")
    r, iso = robustness_matrix(g, pop.labels_of(f))
    bad = a & iso & (pop.mass > 0)
    if bad.any():
        raise IsolatedPointError(
            f"{int(bad.sum())} isolated positive-mass point(s) in A, e.g. "
            f"{pop.ids[int(np.flatnonzero(bad)[0])]!r}")
    return float((pop.mass[a] * np.nan_to_num(r[a])).sum() / pa)


def markov_robust_mass_bound(gamma: float, eta: float) -> float:
    """Upper bound gamma/eta (clamped at 1) on the non-robust mass."""
    if eta <= 0:
        raise ParameterError("eta must be positive")
    return min(1.0, gamma / eta)
