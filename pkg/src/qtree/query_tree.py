"""Query trees under the rank-induced orientation.

An edge ``{u, w}`` is oriented ``w -> u`` when ``rank(w) <= rank(u)``, and in
both directions on a tie. The query tree of ``v`` is everything reachable from
``v``, i.e. everything reached along rank-non-decreasing paths.

Ranks are read through any object exposing ``key(v)`` (exact 64-bit rank),
``rank(v)`` (float in ``[0, 1]``) and vectorized ``keys()`` / ``ranks()``; see
:mod:`qtree.ranks`.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from qtree.graph import Graph, boundary
from qtree.ranks import Quantizer


@dataclass(frozen=True)
class OrientedGraph:
    """Out-arcs in CSR form: arcs of ``v`` are ``indices[indptr[v]:indptr[v+1]]``."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def out_neighbors(self, v: int) -> list[int]:
        return self.indices[self.indptr[v]:self.indptr[v + 1]].tolist()

    def arcs(self) -> set[tuple[int, int]]:
        ptr = self.indptr.tolist()
        idx = self.indices.tolist()
        return {(v, idx[j]) for v in range(self.n) for j in range(ptr[v], ptr[v + 1])}


@dataclass(frozen=True)
class ExplorationTrace:
    """Outcome of the quantized ``(T, R)`` exploration from ``root``.

    ``layers`` maps every exposed vertex (all of ``R``) to its layer and
    ``exposure_order`` lists ``R`` in the order layers were revealed.
    ``layer_prefix_sizes[l]`` is the number of ``T`` vertices with layer
    ``<= l``; entry 0 is always 0 because layers start at 1.
    """

    root: int
    root_layer: int
    L: int
    T: frozenset
    R: frozenset
    exposure_order: tuple
    processed_order: tuple
    layers: dict = field(compare=False)
    layer_prefix_sizes: tuple
    probes: int

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "root_layer": self.root_layer,
            "L": self.L,
            "T": sorted(self.T),
            "R": sorted(self.R),
            "exposure_order": list(self.exposure_order),
            "layers": [self.layers[u] for u in self.exposure_order],
            "layer_prefix_sizes": list(self.layer_prefix_sizes),
            "probes": self.probes,
        }


def _edge_directions(g: Graph, values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    us, vs = g.edge_arrays
    fwd = values[us] <= values[vs]
    bwd = values[vs] <= values[us]
    src = np.concatenate([us[fwd], vs[bwd]])
    dst = np.concatenate([vs[fwd], us[bwd]])
    return us, vs, src, dst


def orient(g: Graph, o, q: Quantizer | None = None) -> OrientedGraph:
    """Materialize the orientation induced by exact ranks, or by layers if ``q`` is given."""
    if q is None:
        values = o.keys()
    else:
        values = q.quantize_array(o.ranks())
    _, _, src, dst = _edge_directions(g, values)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=g.n), out=indptr[1:])
    return OrientedGraph(g.n, indptr, dst.astype(np.int64))


def query_tree_exact(g: Graph, o, v: int) -> frozenset:
    """Vertices reachable from ``v`` along arcs of the exact-rank orientation.

    Explores lazily: only vertices in the result and their neighbors have
    their rank evaluated.
    """
    g.check_vertex(v)
    adj = g.adj
    key = o.key
    keys = {v: key(v)}
    seen = {v}
    queue = deque([v])
    while queue:
        w = queue.popleft()
        kw = keys[w]
        for u in adj[w]:
            if u in seen:
                continue
            ku = keys.get(u)
            if ku is None:
                ku = keys[u] = key(u)
            if ku >= kw:
                seen.add(u)
                queue.append(u)
    return frozenset(seen)


def query_tree_quantized(g: Graph, o, q: Quantizer, v: int, order: str = "fifo") -> ExplorationTrace:
    """Grow ``T`` and ``R`` from ``v`` using quantized layers.

    Start with ``T = R = {v}``. Repeatedly take an unprocessed ``w`` in ``T``,
    expose every neighbor (adding it to ``R``), and put neighbors with
    ``layer >= layer(w)`` into ``T``. ``order="fifo"`` picks the earliest
    exposed unprocessed vertex, ``"lifo"`` the latest; the final sets are the
    same either way.
    """
    if order not in ("fifo", "lifo"):
        raise ValueError(f"order must be 'fifo' or 'lifo', got {order!r}")
    g.check_vertex(v)
    adj = g.adj
    L = q.L
    quantize, rank = q.quantize, o.rank
    layers = {v: quantize(rank(v))}
    position = {v: 0}
    exposure = [v]
    in_T = {v}
    pending = [0]
    processed = []
    lifo = order == "lifo"
    while pending:
        idx = -heapq.heappop(pending) if lifo else heapq.heappop(pending)
        w = exposure[idx]
        processed.append(w)
        lw = layers[w]
        for u in adj[w]:
            lu = layers.get(u)
            if lu is None:
                lu = layers[u] = quantize(rank(u))
                position[u] = len(exposure)
                exposure.append(u)
            if lu >= lw and u not in in_T:
                in_T.add(u)
                heapq.heappush(pending, -position[u] if lifo else position[u])
    counts = [0] * (L + 1)
    for u in in_T:
        counts[layers[u]] += 1
    prefix = []
    running = 0
    for c in counts:
        running += c
        prefix.append(running)
    return ExplorationTrace(
        root=v,
        root_layer=layers[v],
        L=L,
        T=frozenset(in_T),
        R=frozenset(exposure),
        exposure_order=tuple(exposure),
        processed_order=tuple(processed),
        layers=layers,
        layer_prefix_sizes=tuple(prefix),
        probes=len(processed),
    )


def query_tree_bfs_oracle(g: Graph, o, v: int, quantized: Quantizer | None = None) -> frozenset:
    """Reachable set from ``v`` computed on a fully materialized orientation."""
    g.check_vertex(v)
    og = orient(g, o, quantized)
    ptr = og.indptr.tolist()
    idx = og.indices.tolist()
    seen = {v}
    frontier = [v]
    while frontier:
        nxt = []
        for w in frontier:
            for j in range(ptr[w], ptr[w + 1]):
                u = idx[j]
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return frozenset(seen)


def layer_prefix_sizes(trace: ExplorationTrace, q: Quantizer) -> list[int]:
    """``[|T_{<=0}|, ..., |T_{<=L}|]`` recomputed from the trace's layers."""
    out = [0] * (q.L + 1)
    for u in trace.T:
        lu = trace.layers[u]
        for ell in range(lu, q.L + 1):
            out[ell] += 1
    return out


def count_monotone_paths(g: Graph, o, v: int, k_max: int) -> list[int]:
    """Number of walks of each length ``0..k_max`` from ``v`` with strictly increasing rank.

    Strict monotonicity rules out revisits, so these are simple paths. The
    decreasing convention gives the same distribution under uniform ranks.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    g.check_vertex(v)
    adj = g.adj
    keys: dict[int, int] = {}

    def key(u: int) -> int:
        k = keys.get(u)
        if k is None:
            k = keys[u] = o.key(u)
        return k

    # ways[u] = number of increasing paths of the current length from v ending at u
    ways = {v: 1}
    counts = [1]
    for _ in range(k_max):
        nxt: dict[int, int] = {}
        for w, c in ways.items():
            kw = key(w)
            for u in adj[w]:
                if key(u) > kw:
                    nxt[u] = nxt.get(u, 0) + c
        ways = nxt
        counts.append(sum(ways.values()))
    return counts


def tree_sizes(g: Graph, o, q: Quantizer | None = None, vertices=None, reverse: bool = False) -> list[int]:
    """``|T_v|`` for each requested vertex (default: all), exact or quantized.

    ``reverse=True`` follows rank-non-increasing paths instead.
    """
    if q is None:
        vals = o.keys().tolist()
    else:
        vals = q.quantize_array(o.ranks()).tolist()
    if reverse:
        vals = [-x for x in vals]
    adj = g.adj
    out = []
    for v in range(g.n) if vertices is None else vertices:
        seen = {v}
        stack = [v]
        while stack:
            w = stack.pop()
            kw = vals[w]
            for u in adj[w]:
                if u not in seen and vals[u] >= kw:
                    seen.add(u)
                    stack.append(u)
        out.append(len(seen))
    return out


def trace_violations(g: Graph, trace: ExplorationTrace) -> list[str]:
    """Check a completed trace against its structural invariants.

    Returns human-readable descriptions of every violated invariant (empty
    when the trace is sound).
    """
    T, R, layers = trace.T, trace.R, trace.layers
    d = g.d_bound
    problems = []
    if trace.root not in T or not T <= R:
        problems.append("root in T subset of R fails")
    if R != T | boundary(g, T):
        problems.append("R differs from T plus its boundary")
    if len(R) > (d + 1) * len(T):
        problems.append(f"|R|={len(R)} exceeds (d+1)|T|={(d + 1) * len(T)}")
    prefix = trace.layer_prefix_sizes
    if prefix[0] != 0 or prefix[-1] != len(T) or any(a > b for a, b in zip(prefix, prefix[1:])):
        problems.append(f"bad layer prefix sizes {prefix}")
    outside = R - T
    for i in range(1, trace.L + 1):
        t_le = [w for w in T if layers[w] <= i]
        if not t_le:
            continue
        bnd = boundary(g, t_le)
        bad = sorted(u for u in outside if layers[u] == i and u in bnd)
        if bad:
            problems.append(f"layer {i}: vertices {bad} of R-T lie on the boundary of T_<={i}")
    for u in T:
        if u != trace.root and not any(w in T and layers[w] <= layers[u] for w in g.adj[u]):
            problems.append(f"vertex {u} in T has no non-increasing predecessor in T")
    if trace.probes != len(T) or sorted(trace.processed_order) != sorted(T):
        problems.append("probe count differs from processed vertices")
    return problems
