import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtree.graph import Graph, InputError, boundary, gen_cycle, gen_random_regular
from qtree.lca import global_greedy_mis, mis_query, verify_consistency
from qtree.query_tree import query_tree_exact
from qtree.ranks import FixedRanks, RankOracle

from conftest import graph_and_ranks


def brute_greedy(g, o):
    """Greedy MIS straight from the definition, one vertex at a time."""
    order = sorted(range(g.n), key=lambda v: (o.key(v), v))
    chosen = []
    for v in order:
        if all(u not in chosen for u in g.adj[v]):
            chosen.append(v)
    return set(chosen)


def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)]), FixedRanks([0.2, 0.5, 0.9])


def test_triangle_example():
    g, o = triangle()
    assert [mis_query(g, o, v).in_mis for v in range(3)] == [True, False, False]
    assert global_greedy_mis(g, o) == {0} == brute_greedy(g, o)


def test_isolated_vertex():
    a = mis_query(Graph(1, [()]), RankOracle(0, 1), 0)
    assert a.in_mis and a.explored == 1 and a.probes == 1


def test_path_example(path3):
    # greedy order b, a, c: b joins and blocks both a and c (c is adjacent to b)
    g, o = path3
    assert brute_greedy(g, o) == {1}
    assert [mis_query(g, o, v).in_mis for v in range(3)] == [False, True, False]


def test_global_examples():
    assert global_greedy_mis(Graph(5, [()] * 5), RankOracle(1, 5)) == set(range(5))
    k5 = Graph.from_edges(5, itertools.combinations(range(5), 2))
    o = RankOracle(3, 5)
    assert global_greedy_mis(k5, o) == {min(range(5), key=o.key)}


def test_out_of_range():
    g, o = triangle()
    with pytest.raises(InputError):
        mis_query(g, o, 3)


def test_ties_broken_by_id():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    o = FixedRanks([0.5, 0.5, 0.5])
    assert [mis_query(g, o, v).in_mis for v in range(3)] == [True, False, True]


@settings(max_examples=150)
@given(graph_and_ranks(max_n=9, coarse=True))
def test_local_answers_assemble_greedy_mis(gr):
    g, o = gr
    rep = verify_consistency(g, o)
    assert rep.consistent and not rep.mismatches
    assert global_greedy_mis(g, o) == brute_greedy(g, o)


@settings(max_examples=100)
@given(graph_and_ranks(max_n=9))
def test_explored_bounded_by_reverse_tree(gr):
    g, o = gr
    rev = FixedRanks([1.0 - r for r in o.values])
    for v in range(g.n):
        a = mis_query(g, o, v)
        tree = query_tree_exact(g, rev, v)
        assert 1 <= a.explored <= len(tree) + len(boundary(g, tree))
        assert a.probes >= 1


def test_query_order_independent_and_shared_cache():
    g = gen_random_regular(400, 3, seed=4)
    o = RankOracle(8, g.n)
    fresh = {v: mis_query(g, o, v).in_mis for v in range(g.n)}
    cache = {}
    shared = {v: mis_query(g, o, v, cache=cache).in_mis for v in reversed(range(g.n))}
    assert fresh == shared


def test_cycle_consistency():
    rep = verify_consistency(gen_cycle(100), RankOracle(5, 100))
    assert rep.consistent and rep.independent and rep.maximal
    assert rep.probes_max >= 1


def test_empty_graph_consistent():
    assert verify_consistency(Graph(0, []), RankOracle(0, 0)).consistent


def test_long_decreasing_chain_needs_no_recursion():
    n = 20_000
    g = Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    o = FixedRanks([i / n for i in range(n)])
    # vertex n-1 depends on the whole chain below it
    a = mis_query(g, o, n - 1)
    assert a.in_mis == ((n - 1) % 2 == 0)
    assert a.explored == n
