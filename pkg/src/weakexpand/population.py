"""Finite weakly-labeled populations.

A population is a finite set of points, each with a probability mass, a gold
label and a weak (pseudo)label that may abstain.  Point sets are passed around
as collections of point ids; internally everything is a boolean mask over the
population order.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import PopulationError, UndefinedConditionalError

ABSTAIN = None
# internal encoding of an abstaining weak label
_ABSTAIN_CODE = -1

TOL = 1e-9
LOAD_TOL = 1e-6


@dataclass(frozen=True)
class Population:
    ids: tuple
    mass: np.ndarray
    gold: np.ndarray
    weak: np.ndarray  # -1 encodes abstain
    num_classes: int
    index: Mapping[str, int] = field(repr=False, compare=False)

    def __len__(self):
        return len(self.ids)

    @property
    def covered(self) -> np.ndarray:
        return self.weak != _ABSTAIN_CODE

    def mask(self, points) -> np.ndarray:
        """Boolean mask for a collection of ids (or pass-through for a mask)."""
        if isinstance(points, np.ndarray) and points.dtype == bool:
            if points.shape != (len(self),):
                raise ValueError("mask has wrong shape")
            return points
        m = np.zeros(len(self), dtype=bool)
        for pid in points:
            try:
                m[self.index[pid]] = True
            except KeyError:
                raise PopulationError(f"unknown point id {pid!r}") from None
        return m

    def to_set(self, mask: np.ndarray) -> frozenset:
        return frozenset(self.ids[i] for i in np.flatnonzero(mask))

    def prob(self, points) -> float:
        return float(self.mass[self.mask(points)].sum())

    def labels_of(self, f: "LabelAssignment | Mapping[str, int]") -> np.ndarray:
        """Label array of a classifier in population order."""
        if isinstance(f, LabelAssignment):
            return f.array(self)
        return LabelAssignment(f).array(self)

    def weak_label(self, pid: str):
        w = int(self.weak[self.index[pid]])
        return ABSTAIN if w == _ABSTAIN_CODE else w


def make_population(points: Iterable, num_classes: int | None = None) -> Population:
    """Build a validated population.

    ``points`` yields ``(id, mass, gold, weak)`` tuples; ``mass`` may be None
    for every point (uniform) and ``weak`` may be None (abstain).
    """
    rows = list(points)
    if not rows:
        raise PopulationError("empty population")
    ids = tuple(str(r[0]) for r in rows)
    index = {}
    for i, pid in enumerate(ids):
        if pid in index:
            raise PopulationError(f"duplicate id {pid!r}")
        index[pid] = i
    masses = [r[1] for r in rows]
    if all(m is None for m in masses):
        mass = np.full(len(rows), 1.0 / len(rows))
    elif any(m is None for m in masses):
        raise PopulationError("mass given for some points but not others")
    else:
        mass = np.asarray(masses, dtype=float)
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise PopulationError("masses must be finite and nonnegative")
        total = mass.sum()
        if abs(total - 1.0) > LOAD_TOL:
            raise PopulationError(f"masses sum to {total!r}, not 1")
        mass = mass / total
    gold = np.asarray([int(r[2]) for r in rows], dtype=np.int64)
    weak = np.asarray([_ABSTAIN_CODE if r[3] is None else int(r[3]) for r in rows],
                      dtype=np.int64)
    k = num_classes
    if k is None:
        k = int(max(gold.max(), weak.max(), 1)) + 1
    if k < 1:
        raise PopulationError("num_classes must be positive")
    if gold.min() < 0 or gold.max() >= k:
        raise PopulationError(f"gold label out of range 0..{k - 1}")
    if np.any((weak != _ABSTAIN_CODE) & ((weak < 0) | (weak >= k))):
        raise PopulationError(f"weak label out of range 0..{k - 1}")
    for a in (mass, gold, weak):
        a.setflags(write=False)
    return Population(ids, mass, gold, weak, k, index)


def load_population(source: IO | str, num_classes: int | None = None) -> Population:
    """Read a population from JSON Lines (a path or a text/byte stream).

    Each line is ``{"id": str, "mass": float?, "y": int, "weak": int|null}``;
    unknown keys are ignored.
    """
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return load_population(fh, num_classes)
    rows = []
    for lineno, line in enumerate(source, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            rows.append((obj["id"], obj.get("mass"), obj["y"], obj.get("weak")))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise PopulationError(f"line {lineno}: malformed point record ({exc})") from None
    return make_population(rows, num_classes)


def dump_population(pop: Population, sink: IO | None = None) -> str:
    """Serialize to JSON Lines; returns the text and writes it to ``sink`` if given."""
    buf = io.StringIO()
    for pid, m, y, w in zip(pop.ids, pop.mass, pop.gold, pop.weak):
        rec = {"id": pid, "mass": float(m), "y": int(y),
               "weak": None if w == _ABSTAIN_CODE else int(w)}
        buf.write(json.dumps(rec) + "\n")
    text = buf.getvalue()
    if sink is not None:
        sink.write(text)
    return text


class LabelAssignment:
    """A total classifier over a population: id -> class index."""

    __slots__ = ("labels", "_cache")

    def __init__(self, labels: Mapping[str, int]):
        self.labels = {str(k): int(v) for k, v in labels.items()}
        self._cache = None

    @classmethod
    def from_array(cls, pop: Population, values: Sequence[int]) -> "LabelAssignment":
        if len(values) != len(pop):
            raise ValueError("label array length does not match population")
        f = cls(dict(zip(pop.ids, (int(v) for v in values))))
        f._cache = (pop, np.asarray(values, dtype=np.int64))
        return f

    @classmethod
    def constant(cls, pop: Population, label: int) -> "LabelAssignment":
        return cls.from_array(pop, [label] * len(pop))

    @classmethod
    def gold(cls, pop: Population) -> "LabelAssignment":
        return cls.from_array(pop, pop.gold)

    def array(self, pop: Population) -> np.ndarray:
        if self._cache is not None and self._cache[0] is pop:
            return self._cache[1]
        try:
            arr = np.fromiter((self.labels[pid] for pid in pop.ids), dtype=np.int64,
                              count=len(pop))
        except KeyError as exc:
            raise PopulationError(f"classifier has no label for point {exc.args[0]!r}") from None
        if arr.size and (arr.min() < 0 or arr.max() >= pop.num_classes):
            raise PopulationError("classifier label out of range")
        self._cache = (pop, arr)
        return arr

    def __getitem__(self, pid):
        return self.labels[pid]

    def __eq__(self, other):
        return isinstance(other, LabelAssignment) and self.labels == other.labels

    def __hash__(self):
        return hash(frozenset(self.labels.items()))

    def __repr__(self):
        return f"LabelAssignment({len(self.labels)} points)"


def load_predictions(source: IO | str, pop: Population | None = None) -> LabelAssignment:
    """Read a prediction file (JSON Lines ``{"id": str, "pred": int}``)."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return load_predictions(fh, pop)
    labels = {}
    for lineno, line in enumerate(source, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            labels[str(obj["id"])] = int(obj["pred"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise PopulationError(f"line {lineno}: malformed prediction ({exc})") from None
    f = LabelAssignment(labels)
    if pop is not None:
        f.array(pop)  # totality and range check
    return f


@dataclass(frozen=True)
class ClassPartition:
    label: int
    S: np.ndarray
    T: np.ndarray
    good: np.ndarray
    bad: np.ndarray
    alpha: float | None  # None when P(S_i) = 0

    def usable(self) -> bool:
        """Whether this class enters bound evaluation (0 < alpha < 1/2)."""
        return self.alpha is not None and 0.0 < self.alpha < 0.5

    def diagnostic(self) -> str | None:
        if self.alpha is None:
            return "P(S_i)=0: alpha undefined"
        if not 0.0 < self.alpha < 0.5:
            return f"alpha={self.alpha:.6g} outside (0, 1/2)"
        return None


@dataclass(frozen=True)
class Partition:
    S: np.ndarray
    T: np.ndarray
    classes: tuple

    def __getitem__(self, i) -> ClassPartition:
        return self.classes[i]


def partition(pop: Population) -> Partition:
    covered = pop.covered
    classes = []
    for i in range(pop.num_classes):
        Xi = pop.gold == i
        S_i = Xi & covered
        good = S_i & (pop.weak == i)
        bad = S_i & ~good
        pS = pop.mass[S_i].sum()
        alpha = float(pop.mass[bad].sum() / pS) if pS > 0 else None
        for a in (S_i, Xi & ~covered, good, bad):
            a.setflags(write=False)
        classes.append(ClassPartition(i, S_i, Xi & ~covered, good, bad, alpha))
    S = covered.copy()
    T = ~covered
    return Partition(S, T, tuple(classes))


def conditional_prob(pop: Population, U, A) -> float:
    """P(U | A)."""
    u, a = pop.mask(U), pop.mask(A)
    pa = pop.mass[a].sum()
    if pa <= 0:
        raise UndefinedConditionalError("conditioning set has zero probability")
    return float(pop.mass[u & a].sum() / pa)


def disagreement(pop: Population, f, g, U) -> float:
    """err(f, g | U): mass-weighted disagreement of two classifiers on U.

    ``g`` may be the string ``"weak"`` to compare against the pseudolabels,
    ``"gold"`` for the true labels, or any classifier.
    """
    u = pop.mask(U)
    pu = pop.mass[u].sum()
    if pu <= 0:
        raise UndefinedConditionalError("conditioning set has zero probability")
    fa = _as_labels(pop, f)
    ga = _as_labels(pop, g)
    if np.any((ga[u] == _ABSTAIN_CODE) | (fa[u] == _ABSTAIN_CODE)):
        raise PopulationError("abstaining point inside the comparison set")
    return float(pop.mass[u & (fa != ga)].sum() / pu)


def _as_labels(pop: Population, f) -> np.ndarray:
    if isinstance(f, str):
        if f == "weak":
            return pop.weak
        if f == "gold":
            return pop.gold
        raise ValueError(f"unknown label source {f!r}")
    if isinstance(f, np.ndarray):
        return f
    return pop.labels_of(f)


def is_close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=TOL)
