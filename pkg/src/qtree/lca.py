"""Local computation of the random-order greedy maximal independent set.

Vertices are ordered by ``(rank, id)``. A vertex joins the MIS iff none of its
earlier neighbors joined. ``mis_query`` answers this for one vertex by
recursing only into earlier neighbors, so its work is bounded by the query
tree of the reversed orientation plus that tree's boundary.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from qtree.graph import Graph


@dataclass(frozen=True)
class LcaAnswer:
    vertex: int
    in_mis: bool
    probes: int
    explored: int

    def to_dict(self) -> dict:
        return asdict(self)


def mis_query(g: Graph, o, v: int, cache: dict | None = None) -> LcaAnswer:
    """Decide whether ``v`` belongs to the greedy MIS.

    ``probes`` counts neighbor-list reads and ``explored`` the distinct
    vertices whose rank was evaluated. Memoization is private to the call
    unless a shared ``cache`` dict is passed (benchmarking only).
    """
    g.check_vertex(v)
    adj = g.adj
    keys: dict[int, int] = {}
    decided: dict[int, bool] = {} if cache is None else cache
    probes = 0

    def order(u: int) -> tuple[int, int]:
        k = keys.get(u)
        if k is None:
            k = keys[u] = o.key(u)
        return (k, u)

    def earlier(w: int) -> list[int]:
        nonlocal probes
        probes += 1
        mine = order(w)
        return sorted((u for u in adj[w] if order(u) < mine), key=order)

    if v in decided:
        order(v)
        return LcaAnswer(v, decided[v], 1, 1)

    # frames: [vertex, earlier neighbors in greedy order, next index]
    stack = [[v, earlier(v), 0]]
    while stack:
        frame = stack[-1]
        w, lower, i = frame
        if i == len(lower):
            decided[w] = True
            stack.pop()
            continue
        u = lower[i]
        got = decided.get(u)
        if got is None:
            stack.append([u, earlier(u), 0])
        elif got:
            decided[w] = False
            stack.pop()
        else:
            frame[2] = i + 1
    return LcaAnswer(v, decided[v], probes, len(keys))


def global_greedy_mis(g: Graph, o) -> set[int]:
    """Sequential greedy MIS over vertices sorted by ``(rank, id)``."""
    keys = o.keys().tolist()
    chosen: set[int] = set()
    blocked = [False] * g.n
    for v in sorted(range(g.n), key=lambda u: (keys[u], u)):
        if not blocked[v]:
            chosen.add(v)
            for u in g.adj[v]:
                blocked[u] = True
    return chosen


@dataclass
class ConsistencyReport:
    consistent: bool
    independent: bool
    maximal: bool
    mis_size: int
    mismatches: list = field(default_factory=list)
    probes_mean: float = 0.0
    probes_max: int = 0
    explored_mean: float = 0.0
    explored_max: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def verify_consistency(g: Graph, o) -> ConsistencyReport:
    """Query every vertex independently and compare with the sequential greedy MIS."""
    answers = [mis_query(g, o, v) for v in range(g.n)]
    local = {a.vertex for a in answers if a.in_mis}
    reference = global_greedy_mis(g, o)
    mismatches = sorted(local ^ reference)
    independent = all(u not in local for v in local for u in g.adj[v])
    maximal = all(v in local or any(u in local for u in g.adj[v]) for v in range(g.n))
    probes = [a.probes for a in answers]
    explored = [a.explored for a in answers]
    return ConsistencyReport(
        consistent=not mismatches and independent and maximal,
        independent=independent,
        maximal=maximal,
        mis_size=len(local),
        mismatches=mismatches,
        probes_mean=sum(probes) / len(probes) if probes else 0.0,
        probes_max=max(probes, default=0),
        explored_mean=sum(explored) / len(explored) if explored else 0.0,
        explored_max=max(explored, default=0),
    )
