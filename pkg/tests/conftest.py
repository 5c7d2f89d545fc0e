import numpy as np
import pytest
from hypothesis import strategies as st

from bearing_swarm.graph import build_graph

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@st.composite
def connected_graphs(draw, min_n=2, max_n=8):
    """Random spanning tree plus random extra edges."""
    n = draw(st.integers(min_n, max_n))
    edges = set()
    for k in range(1, n):
        parent = draw(st.integers(0, k - 1))
        edges.add((parent, k))
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=12))
    for i, j in extra:
        if i != j:
            edges.add((min(i, j), max(i, j)))
    perm = draw(st.permutations(range(n)))
    return build_graph(n, sorted((min(perm[i], perm[j]), max(perm[i], perm[j])) for i, j in edges))
