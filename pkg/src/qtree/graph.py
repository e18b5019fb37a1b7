"""Undirected graphs with a declared maximum degree.

Vertices are the integers ``0..n-1``. Neighbor lists are kept sorted so every
traversal order is canonical.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_MAX_ATTEMPTS = 100_000


class ParameterError(ValueError):
    """Inadmissible generator parameters."""


class GenerationError(RuntimeError):
    """A randomized generator ran out of retries."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class InputError(ValueError):
    """A vertex id or value outside the admissible domain."""


class FormatError(ValueError):
    """Malformed or inconsistent graph file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Graph:
    """Immutable simple undirected graph with ``max degree <= d_bound``.

    Construction validates symmetry, simplicity and the degree bound; a
    violation raises ``ValueError``.
    """

    def __init__(self, n: int, adj: Sequence[Iterable[int]], d_bound: int | None = None):
        if n < 0:
            raise ValueError("n must be non-negative")
        if len(adj) != n:
            raise ValueError(f"adjacency has {len(adj)} rows, expected {n}")
        rows = tuple(tuple(sorted(int(u) for u in nbrs)) for nbrs in adj)
        self._setup(n, rows, d_bound)

    def _setup(self, n: int, rows: tuple, d_bound: int | None) -> None:
        if d_bound is None:
            d_bound = max((len(r) for r in rows), default=0)
        self.n = n
        self.adj = rows
        self.d_bound = int(d_bound)
        _validate_rows(n, rows, self.d_bound)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], d_bound: int | None = None) -> "Graph":
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            adj[u].append(v)
            adj[v].append(u)
        return cls(n, adj, d_bound)

    @classmethod
    def _from_edge_arrays(cls, n: int, us: np.ndarray, vs: np.ndarray, d_bound: int) -> "Graph":
        src = np.concatenate([us, vs]).astype(np.int64)
        dst = np.concatenate([vs, us]).astype(np.int64)
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        flat = dst.tolist()
        bounds = indptr.tolist()
        g = cls.__new__(cls)
        g._setup(n, tuple([tuple(flat[bounds[i]:bounds[i + 1]]) for i in range(n)]), d_bound)
        return g

    @property
    def m(self) -> int:
        return sum(len(r) for r in self.adj) // 2

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def max_degree(self) -> int:
        return max((len(r) for r in self.adj), default=0)

    def neighbors(self, v: int) -> tuple[int, ...]:
        self.check_vertex(v)
        return self.adj[v]

    def check_vertex(self, v: int) -> None:
        if not (0 <= v < self.n):
            raise InputError(f"vertex {v} out of range [0, {self.n})")

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(u, v)`` with ``u < v`` in lexicographic order."""
        return [(u, v) for u, nbrs in enumerate(self.adj) for v in nbrs if u < v]

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        e = self.edges()
        if not e:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        arr = np.asarray(e, dtype=np.int64)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.d_bound == other.d_bound and self.adj == other.adj

    def __hash__(self) -> int:
        return hash((self.n, self.d_bound, self.adj))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, d_bound={self.d_bound})"


def _validate_rows(n: int, rows: tuple[tuple[int, ...], ...], d_bound: int) -> None:
    """Vectorized check of sortedness, simplicity, range, degree bound and symmetry."""
    if d_bound < 0:
        raise ValueError("d_bound must be non-negative")
    deg = np.fromiter(map(len, rows), dtype=np.int64, count=n)
    if n and deg.max() > d_bound:
        v = int(np.argmax(deg))
        raise ValueError(f"vertex {v} has degree {deg[v]} > d_bound={d_bound}")
    src = np.repeat(np.arange(n, dtype=np.int64), deg)
    dst = np.fromiter((u for r in rows for u in r), dtype=np.int64, count=len(src))
    if len(dst) and (dst.min() < 0 or dst.max() >= n):
        raise ValueError("neighbor id out of range")
    loops = np.flatnonzero(src == dst)
    if loops.size:
        raise ValueError(f"self-loop at {src[loops[0]]}")
    same_row = src[1:] == src[:-1]
    dup = np.flatnonzero(same_row & (dst[1:] <= dst[:-1]))
    if dup.size:
        raise ValueError(f"duplicate edge or unsorted row at vertex {src[dup[0]]}")
    fwd = np.sort(src * max(n, 1) + dst)
    bwd = np.sort(dst * max(n, 1) + src)
    if not np.array_equal(fwd, bwd):
        raise ValueError("adjacency is not symmetric")


def boundary(g: Graph, S: Iterable[int]) -> set[int]:
    """Vertices outside ``S`` adjacent to some vertex of ``S``."""
    S = set(S)
    out: set[int] = set()
    for v in S:
        g.check_vertex(v)
        out.update(g.adj[v])
    out.difference_update(S)
    return out


def validate(g: Graph) -> None:
    _validate_rows(g.n, g.adj, g.d_bound)


# -- generators ---------------------------------------------------------------


def gen_random_regular(n: int, d: int, seed: int, max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> Graph:
    """Uniform simple ``d``-regular graph by configuration-model pairing.

    Whole pairings containing a self-loop or repeated edge are discarded. The
    acceptance rate is roughly ``exp(-(d*d - 1) / 4)``, so this is practical
    for small ``d`` only.
    """
    if n < 0 or d < 0:
        raise ParameterError("n and d must be non-negative")
    if (n * d) % 2:
        raise ParameterError(f"n*d must be even (n={n}, d={d})")
    if d >= n and not (n == 0 and d == 0):
        raise ParameterError(f"need 0 <= d < n (n={n}, d={d})")
    if d == 0:
        return Graph(n, [() for _ in range(n)], 0)
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    for _ in range(max_attempts):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        a, b = pairs[:, 0], pairs[:, 1]
        if np.any(a == b):
            continue
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        codes = lo * n + hi
        if np.unique(codes).size != codes.size:
            continue
        return Graph._from_edge_arrays(n, lo, hi, d)
    raise GenerationError(
        f"no simple {d}-regular pairing on {n} vertices after {max_attempts} attempts", max_attempts
    )


def gen_cycle(n: int) -> Graph:
    if n < 3:
        raise ParameterError(f"cycle needs n >= 3, got {n}")
    return Graph(n, [((v - 1) % n, (v + 1) % n) for v in range(n)], 2)


def gen_grid(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1:
        raise ParameterError(f"grid dimensions must be positive, got {rows}x{cols}")
    adj: list[list[int]] = []
    for r in range(rows):
        for c in range(cols):
            nbrs = []
            if r > 0:
                nbrs.append((r - 1) * cols + c)
            if c > 0:
                nbrs.append(r * cols + c - 1)
            if c + 1 < cols:
                nbrs.append(r * cols + c + 1)
            if r + 1 < rows:
                nbrs.append((r + 1) * cols + c)
            adj.append(nbrs)
    return Graph(rows * cols, adj, 4)


def gen_capped_random(n: int, p: float, d: int, seed: int) -> Graph:
    """G(n, p) with a degree cap.

    Pairs ``(u, v)``, ``u < v``, are visited in lexicographic order; a sampled
    edge is dropped if either endpoint already has degree ``d``.
    """
    if n < 0 or d < 0:
        raise ParameterError("n and d must be non-negative")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    deg = [0] * n
    adj: list[list[int]] = [[] for _ in range(n)]
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - u - 1) < p) + (u + 1)
        for v in hits.tolist():
            if deg[u] >= d:
                break
            if deg[v] < d:
                adj[u].append(v)
                adj[v].append(u)
                deg[u] += 1
                deg[v] += 1
    return Graph(n, adj, d)


# -- specs ----------------------------------------------------------------------

GRAPH_KINDS = ("regular", "cycle", "grid", "capped-random", "file")


@dataclass(frozen=True)
class GraphSpec:
    kind: str
    n: int | None = None
    d: int | None = None
    rows: int | None = None
    cols: int | None = None
    p: float | None = None
    path: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in GRAPH_KINDS:
            raise ParameterError(f"unknown graph kind {self.kind!r}; expected one of {GRAPH_KINDS}")
        need = {
            "regular": ("n", "d"),
            "cycle": ("n",),
            "grid": ("rows", "cols"),
            "capped-random": ("n", "p", "d"),
            "file": ("path",),
        }[self.kind]
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ParameterError(f"graph kind {self.kind!r} requires {', '.join(missing)}")
        if self.kind == "regular" and ((self.n * self.d) % 2 or not 0 <= self.d < self.n):
            raise ParameterError(f"regular graph needs n*d even and 0 <= d < n (n={self.n}, d={self.d})")

    @property
    def randomized(self) -> bool:
        return self.kind in ("regular", "capped-random")

    def degree_bound(self) -> int | None:
        if self.kind in ("regular", "capped-random"):
            return self.d
        if self.kind == "cycle":
            return 2
        if self.kind == "grid":
            return 4
        return None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "GraphSpec":
        data = dict(data)
        if "type" in data and "kind" not in data:
            data["kind"] = data.pop("type")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown graph spec fields: {sorted(unknown)}")
        return cls(**data)


def build_graph(spec: GraphSpec, seed: int | None = None) -> Graph:
    """Materialize ``spec``; ``seed`` overrides ``spec.seed`` for random kinds."""
    s = spec.seed if seed is None else seed
    if spec.kind == "regular":
        return gen_random_regular(spec.n, spec.d, s)
    if spec.kind == "cycle":
        return gen_cycle(spec.n)
    if spec.kind == "grid":
        return gen_grid(spec.rows, spec.cols)
    if spec.kind == "capped-random":
        return gen_capped_random(spec.n, spec.p, spec.d, s)
    return load_graph(spec.path)


# -- edge-list files ----------------------------------------------------------------


def save_graph(g: Graph, path: str | os.PathLike) -> None:
    edges = g.edges()
    lines = [f"{g.n} {len(edges)} {g.d_bound}"]
    lines.extend(f"{u} {v}" for u, v in edges)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _ints(text: str, count: int, lineno: int) -> list[int]:
    parts = text.split()
    if len(parts) != count:
        raise FormatError(f"expected {count} integers, got {len(parts)}", lineno)
    try:
        return [int(x) for x in parts]
    except ValueError:
        raise FormatError(f"non-integer field in {text!r}", lineno) from None


def parse_graph(text: str) -> Graph:
    header = None
    seen: set[tuple[int, int]] = set()
    adj: list[list[int]] = []
    n = d = m = 0
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = _strip(raw.rstrip("\r"))
        if not line:
            continue
        if header is None:
            n, m, d = header = _ints(line, 3, lineno)
            if n < 0 or m < 0 or d < 0:
                raise FormatError("header values must be non-negative", lineno)
            adj = [[] for _ in range(n)]
            continue
        u, v = _ints(line, 2, lineno)
        if not (0 <= u < n and 0 <= v < n):
            raise FormatError(f"vertex out of range in edge ({u}, {v}) for n={n}", lineno)
        if u == v:
            raise FormatError(f"self-loop ({u}, {v})", lineno)
        if u > v:
            raise FormatError(f"edge ({u}, {v}) not written with u < v", lineno)
        if (u, v) in seen:
            raise FormatError(f"duplicate edge ({u}, {v})", lineno)
        seen.add((u, v))
        for a, b in ((u, v), (v, u)):
            adj[a].append(b)
            if len(adj[a]) > d:
                raise FormatError(f"vertex {a} exceeds declared degree bound {d}", lineno)
    if header is None:
        raise FormatError("missing header line 'n m d'", 1)
    if len(seen) != m:
        raise FormatError(f"header declares {m} edges, found {len(seen)}")
    return Graph(n, adj, d)


def load_graph(path: str | os.PathLike) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())
