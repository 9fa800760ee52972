"""The example graph: symmetric neighborhoods weighted by P(x)P(x')."""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np
import scipy.sparse as sp

from .errors import GraphError, ParameterError, UndefinedConditionalError
from .population import Population

EXACT_THRESHOLD = 24


@dataclass(frozen=True, eq=False)
class ExampleGraph:
    pop: Population
    adj: sp.csr_matrix  # symmetric 0/1, zero diagonal

    def neighbors(self, pid) -> frozenset:
        i = self.pop.index[pid]
        row = self.adj.indices[self.adj.indptr[i]:self.adj.indptr[i + 1]]
        return frozenset(self.pop.ids[j] for j in row)

    def weight(self, x, x2) -> float:
        i, j = self.pop.index[x], self.pop.index[x2]
        return float(self.pop.mass[i] * self.pop.mass[j] * self.adj[i, j])

    @property
    def num_edges(self) -> int:
        return int(self.adj.nnz // 2)

    def degree_mass(self) -> np.ndarray:
        """P(N(x)) for every point."""
        return np.asarray(self.adj @ self.pop.mass).ravel()


def build_graph(pop: Population, edges: Iterable) -> ExampleGraph:
    rows, cols = [], []
    for a, b in edges:
        try:
            i, j = pop.index[str(a)], pop.index[str(b)]
        except KeyError as exc:
            raise GraphError(f"edge references unknown id {exc.args[0]!r}") from None
        if i == j:
            raise GraphError(f"self-loop on {a!r}")
        rows += (i, j)
        cols += (j, i)
    n = len(pop)
    adj = sp.coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n)).tocsr()
    adj.data[:] = 1  # duplicates were summed
    adj.sort_indices()
    return ExampleGraph(pop, adj)


def load_edges(source: IO | str) -> list:
    """Read an edge file: one tab-separated id pair per line, '#' comments."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return load_edges(fh)
    out = []
    for lineno, line in enumerate(source, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected two tab-separated ids")
        out.append((parts[0], parts[1]))
    return out


def dump_edges(g: ExampleGraph, sink: IO | None = None) -> str:
    upper = sp.triu(g.adj, k=1).tocoo()
    pairs = sorted(zip(upper.row.tolist(), upper.col.tolist()))
    text = "".join(f"{g.pop.ids[i]}\t{g.pop.ids[j]}\n" for i, j in pairs)
    if sink is not None:
        sink.write(text)
    return text


def _neighborhood_mask(g: ExampleGraph, u: np.ndarray) -> np.ndarray:
    return np.asarray(g.adj @ u.astype(np.int8)).ravel() > 0


def neighborhood(g: ExampleGraph, U) -> frozenset:
    """N(U), the union of the neighborhoods of the points of U."""
    return g.pop.to_set(_neighborhood_mask(g, g.pop.mask(U)))


def _incident_weight(g: ExampleGraph, u: np.ndarray) -> np.ndarray:
    """w(v, U) for every point v."""
    m = g.pop.mass
    return m * np.asarray(g.adj @ (m * u)).ravel()


def cut_weight(g: ExampleGraph, V, U) -> float:
    """w(V, U): total edge weight between x in V and x' in U."""
    v, u = g.pop.mask(V), g.pop.mask(U)
    return float(_incident_weight(g, u)[v].sum())


def good_edge_neighborhood(g: ExampleGraph, f, U) -> frozenset:
    """Neighbors of U reached by an edge whose endpoints get the same label under f."""
    pop = g.pop
    u = pop.mask(U)
    labels = pop.labels_of(f)
    out = np.zeros(len(pop), dtype=bool)
    for lab in np.unique(labels[u]):
        src = u & (labels == lab)
        out |= _neighborhood_mask(g, src) & (labels == lab)
    return pop.to_set(out)


@dataclass(frozen=True)
class RobustSizeBracket:
    lower: float
    upper: float
    exact: bool
    witness: frozenset

    @property
    def value(self) -> float:
        if not self.exact:
            raise ValueError("bracket is not exact")
        return self.lower


def robust_neighborhood_size(g: ExampleGraph, U, A, eta: float,
                             exact_threshold: int = EXACT_THRESHOLD) -> RobustSizeBracket:
    """P_{1-eta}(U, A): cheapest P(V|A) over V carrying a (1-eta) share of U's edge weight."""
    pop = g.pop
    a = pop.mask(A)
    pa = pop.mass[a].sum()
    if pa <= 0:
        raise UndefinedConditionalError("P(A) = 0")
    if not 0.0 <= eta < 1.0:
        raise ParameterError(f"eta={eta!r} outside [0, 1)")
    u = pop.mask(U)
    lo, hi, exact, wmask = _robust_size(g, u, a, pa, eta, exact_threshold)
    return RobustSizeBracket(lo, hi, exact, pop.to_set(wmask))


def _robust_size(g, u, a, pa, eta, exact_threshold=EXACT_THRESHOLD):
    pop = g.pop
    n = len(pop)
    if eta == 0.0:
        nb = _neighborhood_mask(g, u)
        val = float(pop.mass[nb & a].sum() / pa)
        return val, val, True, nb
    wv = _incident_weight(g, u)
    items = wv > 0
    total = wv[items].sum()
    if total <= 0:
        return 0.0, 0.0, True, np.zeros(n, dtype=bool)
    cost = np.where(a, pop.mass, 0.0) / pa
    free = items & (cost <= 0)
    need = (1.0 - eta) * total - wv[free].sum()
    eps = 1e-12 * total
    cand = np.flatnonzero(items & (cost > 0))
    if need <= eps:
        return 0.0, 0.0, True, free.copy()
    # ratio order, ties by ascending id
    order = sorted(cand.tolist(), key=lambda i: (-wv[i] / cost[i], pop.ids[i]))
    w = [float(wv[i]) for i in order]
    c = [float(cost[i]) for i in order]
    lower, upper, greedy_take = _fractional_and_greedy(w, c, need, eps)
    if len(order) <= exact_threshold:
        best, take = _branch_and_bound(w, c, need, eps, upper, greedy_take)
        wmask = free.copy()
        wmask[[order[k] for k in take]] = True
        return best, best, True, wmask
    wmask = free.copy()
    wmask[[order[k] for k in greedy_take]] = True
    return lower, upper, False, wmask


def _fractional_and_greedy(w, c, need, eps):
    acc_w = acc_c = 0.0
    take = []
    for k in range(len(w)):
        if acc_w + w[k] >= need - eps:
            frac = (need - acc_w) / w[k]
            lower = acc_c + max(frac, 0.0) * c[k]
            take.append(k)
            return lower, acc_c + c[k], take
        acc_w += w[k]
        acc_c += c[k]
        take.append(k)
    # all candidates together carry the full incident weight, so this is unreachable
    return acc_c, acc_c, take


def _branch_and_bound(w, c, need, eps, incumbent, incumbent_take):
    n = len(w)
    suffix_w = [0.0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix_w[k] = suffix_w[k + 1] + w[k]
    best = [incumbent, list(incumbent_take)]

    def bound(k, rem):
        acc = 0.0
        for j in range(k, n):
            if w[j] >= rem - eps:
                return acc + max(rem, 0.0) / w[j] * c[j]
            rem -= w[j]
            acc += c[j]
        return float("inf")

    def visit(k, cost, rem, chosen):
        if rem <= eps:
            if cost < best[0]:
                best[0], best[1] = cost, list(chosen)
            return
        if k == n or suffix_w[k] < rem - eps:
            return
        if cost + bound(k, rem) >= best[0] - 1e-15:
            return
        chosen.append(k)
        visit(k + 1, cost + c[k], rem - w[k], chosen)
        chosen.pop()
        visit(k + 1, cost, rem, chosen)

    visit(0, 0.0, need, [])
    return best[0], best[1]
