import pytest
from hypothesis import strategies as st

from qtree.graph import Graph
from qtree.ranks import FixedRanks

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def path3():
    """Path a-b-c as vertices 0-1-2 with ranks 0.5, 0.3, 0.7."""
    return Graph.from_edges(3, [(0, 1), (1, 2)]), FixedRanks([0.5, 0.3, 0.7])


@st.composite
def small_graphs(draw, max_n=8, max_d=4):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    deg = [0] * n
    edges = []
    for u, v in chosen:
        if deg[u] < max_d and deg[v] < max_d:
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
    return Graph.from_edges(n, edges, max_d)


@st.composite
def graph_and_ranks(draw, max_n=8, coarse=False):
    """A small graph with explicit ranks; ``coarse`` ranks produce many ties."""
    g = draw(small_graphs(max_n=max_n))
    if coarse:
        ranks = draw(st.lists(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]), min_size=g.n, max_size=g.n))
    else:
        ranks = draw(st.lists(st.floats(0.0, 1.0), min_size=g.n, max_size=g.n))
    return g, FixedRanks(ranks)
