import itertools
from pathlib import Path

import numpy as np
import pytest

from weakexpand import build_graph, make_population

FIXTURES = Path(__file__).parent / "fixtures"


def random_instance(rng, n=None, k=2, density=None, abstain=0.3):
    """Small random population with random edges, as (pop, graph)."""
    n = int(rng.integers(3, 9)) if n is None else n
    mass = rng.dirichlet(np.ones(n)) if rng.random() < 0.5 else None
    gold = rng.integers(0, k, n)
    weak = [None if rng.random() < abstain else int(rng.integers(0, k)) for _ in range(n)]
    rows = [(f"p{j}", None if mass is None else float(mass[j]), int(gold[j]), weak[j])
            for j in range(n)]
    pop = make_population(rows, k)
    p = rng.uniform(0.2, 0.8) if density is None else density
    edges = [(f"p{a}", f"p{b}") for a, b in itertools.combinations(range(n), 2)
             if rng.random() < p]
    return pop, build_graph(pop, edges)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
