"""Monte Carlo checks of query-tree size bounds.

Each experiment splits its trials into fixed-size blocks, computes a partial
:class:`~qtree.report.Report` per block, merges the partials in block order
and then derives its checks. Every random choice in trial ``i`` comes from
``child_seed(base_seed, tag, i)``, so the output does not depend on how many
workers ran the blocks.

Tail probabilities of order ``1/n**2`` cannot be observed directly; the
experiments instead assert zero exceedances of the explicit thresholds and
report distributional diagnostics.
"""

from __future__ import annotations

import heapq
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from qtree.graph import Graph, GraphSpec, ParameterError, build_graph
from qtree.lca import mis_query
from qtree.query_tree import count_monotone_paths, query_tree_exact, query_tree_quantized, tree_sizes
from qtree.ranks import Quantizer, RankOracle, child_seed, default_L, parse_mode, parse_seed
from qtree.report import Report, check

log = logging.getLogger(__name__)

EXPERIMENTS = ("expectation", "tmax", "layers", "exposure", "paths", "seedlen", "lca")

# seed-derivation tags
_GRAPH, _RANK, _ROOT = 1, 2, 3


class ConfigError(ValueError):
    """Inconsistent or degenerate experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    graph: GraphSpec
    d: int | None = None
    L: int | None = None
    c: float | None = None
    trials: int = 1000
    base_seed: int = 0
    n_list: tuple = ()
    mode: str = "full"
    modes: tuple = ("full", "kwise:4")
    quantized: bool = False
    graphs: int = 10
    k_max: int = 5
    alpha: float = 1e-3
    sigma: float = 3.0
    source: str = "synthetic"
    block: int = 64

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.graphs < 1 or self.block < 1:
            raise ConfigError("graphs and block must be >= 1")
        try:
            parse_mode(self.mode)
            for m in self.modes:
                parse_mode(m)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        d = self.d
        if d is None:
            d = self.graph.degree_bound()
            if d is None:
                d = build_graph(self.graph).d_bound
            object.__setattr__(self, "d", d)
        if d < 0:
            raise ConfigError("d must be >= 0")
        if self.L is None:
            object.__setattr__(self, "L", default_L(d))
        if self.L < 1:
            raise ConfigError("L must be >= 1")
        if self.c is None:
            object.__setattr__(self, "c", 15 * self.L)
        object.__setattr__(self, "n_list", tuple(self.n_list))
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.source not in ("synthetic", "trace"):
            raise ConfigError("source must be 'synthetic' or 'trace'")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "seed" in data and "base_seed" not in data:
            data["base_seed"] = data.pop("seed")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "experiment" not in data or "graph" not in data:
            raise ConfigError("config needs 'experiment' and 'graph'")
        try:
            graph = data["graph"]
            data["graph"] = graph if isinstance(graph, GraphSpec) else GraphSpec.from_dict(graph)
            data["base_seed"] = parse_seed(data.get("base_seed", 0))
        except (ParameterError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        return cls(**data)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["graph"] = self.graph.to_dict()
        out["n_list"] = list(self.n_list)
        out["modes"] = list(self.modes)
        return out


# -- shared helpers ---------------------------------------------------------------


@lru_cache(maxsize=32)
def _cached_graph(spec: GraphSpec, seed: int) -> Graph:
    return build_graph(spec, seed)


def _instance(cfg: ExperimentConfig, j: int, n: int | None = None) -> Graph:
    spec = cfg.graph if n is None else replace(cfg.graph, n=n)
    seed = child_seed(cfg.base_seed, _GRAPH, j, n or 0) if spec.randomized else 0
    return _cached_graph(spec, seed)


def _graph_index(cfg: ExperimentConfig, i: int) -> int:
    # consecutive trials share a graph instance
    return i * cfg.graphs // cfg.trials


def _log_n(n: int) -> float:
    # log 1 = 0 would zero every threshold; single-vertex graphs use log 2
    return math.log(max(n, 2))


def theorem_threshold(L: int, c: float, n: int) -> float:
    """Size above which ``T_max`` should not be seen: ``2**L * c * log n``."""
    return 2.0**L * c * _log_n(n)


def t_max(g: Graph, o, q: Quantizer | None = None) -> int:
    return max(tree_sizes(g, o, q), default=0)


def ks_distance(hist_a: dict, hist_b: dict) -> float:
    """Two-sample Kolmogorov-Smirnov statistic from value histograms."""
    na, nb = sum(hist_a.values()), sum(hist_b.values())
    if not na or not nb:
        return math.nan
    ca = cb = 0
    best = 0.0
    for x in sorted(set(hist_a) | set(hist_b)):
        ca += hist_a.get(x, 0)
        cb += hist_b.get(x, 0)
        best = max(best, abs(ca / na - cb / nb))
    return best


def ks_critical(alpha: float, na: int, nb: int) -> float:
    """Asymptotic two-sample KS critical value at significance ``alpha``."""
    return math.sqrt(-0.5 * math.log(alpha / 2)) * math.sqrt((na + nb) / (na * nb))


def _pearson(xs, ys) -> float:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if xs.std() == 0 or ys.std() == 0:
        return math.nan
    return float(np.corrcoef(xs, ys)[0, 1])


# -- expectation ------------------------------------------------------------------------


def _expectation_units(cfg):
    return list(range(cfg.trials))


def _expectation_block(cfg, units):
    rep = Report("expectation")
    st = rep.stat("tree_size")
    for i in units:
        g = _instance(cfg, _graph_index(cfg, i))
        seed = child_seed(cfg.base_seed, _RANK, i)
        root = child_seed(cfg.base_seed, _ROOT, i) % g.n
        size = len(query_tree_exact(g, RankOracle(seed, g.n, cfg.mode), root))
        st.add(size)
        rep.cell(g.n, cfg.d, cfg.L, seed, "tree_size", size)
    return rep


def _expectation_finalize(cfg, rep):
    st = rep.stats["tree_size"]
    bound = math.exp(cfg.d)
    upper = st.mean + cfg.sigma * st.stderr
    rep.checks.append(check(f"mean + {cfg.sigma:g} stderr of |T_v| <= e^d", upper, "<=", bound))
    rep.diagnostics = {"mean": st.mean, "stderr": st.stderr, "bound_e_d": bound}


# -- T_max scaling ---------------------------------------------------------------------------


def _tmax_units(cfg):
    if len(cfg.n_list) < 4:
        raise ConfigError("tmax needs an n_list with at least 4 sizes")
    if cfg.graph.kind not in ("regular", "cycle", "capped-random"):
        raise ConfigError("tmax needs a graph kind parameterized by n")
    return [(n, s) for n in cfg.n_list for s in range(cfg.trials)]


def _tmax_block(cfg, units):
    rep = Report("tmax")
    q = Quantizer(cfg.L) if cfg.quantized else None
    for n, s in units:
        g = _instance(cfg, s, n)
        seed = child_seed(cfg.base_seed, _RANK, n, s)
        value = t_max(g, RankOracle(seed, g.n, cfg.mode), q)
        rep.stat(f"tmax/n={n}").add(value)
        rep.bump("exceedances", int(value > theorem_threshold(cfg.L, cfg.c, n)))
        rep.cell(n, cfg.d, cfg.L, seed, "tmax", value)
    return rep


def _tmax_finalize(cfg, rep):
    ns = sorted(set(cfg.n_list))
    medians = [rep.stats[f"tmax/n={n}"].median() for n in ns]
    logs = [math.log(n) for n in ns]
    slope, intercept = (float(x) for x in np.polyfit(logs, medians, 1))
    corr = _pearson(logs, medians)
    rep.counters.setdefault("exceedances", 0)
    rep.checks.append(check("T_max observations above 2^L c log n", rep.counters["exceedances"], "==", 0))
    rep.checks.append(check("slope of median T_max vs log n", slope, ">", 0.0))
    rep.diagnostics = {
        "per_n": {
            str(n): {
                "median": med,
                "max": rep.stats[f"tmax/n={n}"].max,
                "threshold": theorem_threshold(cfg.L, cfg.c, n),
            }
            for n, med in zip(ns, medians)
        },
        "slope": slope,
        "intercept": intercept,
        "correlation_log_n": corr,
        "growth_ratio_last_first": medians[-1] / medians[0],
    }


# -- layer doubling ---------------------------------------------------------------------------


def _layers_units(cfg):
    return list(range(cfg.trials))


def _layers_block(cfg, units):
    rep = Report("layers")
    q = Quantizer(cfg.L)
    L = cfg.L
    for i in range(L):
        rep.bump(f"event_abs/i={i}", 0)
        rep.bump(f"event_rel/j={i}", 0)
    ratio = rep.stat("growth_ratio", bin_width=0.5)
    c_needed = rep.stat("c_needed", bin_width=0.01)
    sizes = rep.stat("tree_size")
    for i in units:
        g = _instance(cfg, _graph_index(cfg, i))
        seed = child_seed(cfg.base_seed, _RANK, i)
        root = child_seed(cfg.base_seed, _ROOT, i) % g.n
        tr = query_tree_quantized(g, RankOracle(seed, g.n, cfg.mode), q, root)
        prefix = tr.layer_prefix_sizes
        base = cfg.c * _log_n(g.n)
        for ell in range(L):
            if prefix[ell] <= 2**ell * base and prefix[ell + 1] >= 2 ** (ell + 1) * base:
                rep.bump(f"event_abs/i={ell}")
            ratio.add(prefix[ell + 1] / max(1, prefix[ell]))
        # the same event with layers counted upward from the root's own layer
        i0 = tr.root_layer
        for j in range(L - i0):
            if prefix[i0 + j] <= 2**j * base and prefix[i0 + j + 1] >= 2 ** (j + 1) * base:
                rep.bump(f"event_rel/j={j}")
        c_needed.add(max(prefix[ell + 1] / (2 ** (ell + 1) * _log_n(g.n)) for ell in range(L)))
        sizes.add(len(tr.T))
        rep.cell(g.n, cfg.d, L, seed, "tree_size", len(tr.T))
    return rep


def _layers_finalize(cfg, rep):
    total_abs = sum(v for k, v in rep.counters.items() if k.startswith("event_abs"))
    total_rel = sum(v for k, v in rep.counters.items() if k.startswith("event_rel"))
    rep.checks.append(check("layer-doubling events (absolute layers)", total_abs, "==", 0))
    rep.checks.append(check("layer-doubling events (root-relative layers)", total_rel, "==", 0))
    rep.diagnostics = {
        "growth_ratio_hist": [[k, v] for k, v in sorted(rep.stats["growth_ratio"].hist.items())],
        "largest_c_that_could_trigger": rep.stats["c_needed"].max,
        "c": cfg.c,
    }


# -- exposure concentration ---------------------------------------------------------------------


def adaptive_exposure(g: Graph, layers: list[int], root: int) -> list[int]:
    """Expose every vertex, always expanding the exposed vertex of highest layer.

    The next vertex depends on layers already revealed, never on unrevealed
    ones. When a component is exhausted the smallest unexposed id is taken.
    """
    adj = g.adj
    exposed = [False] * g.n
    order = []
    heap = []
    nxt = 0
    start = root
    while True:
        exposed[start] = True
        order.append(start)
        heapq.heappush(heap, (-layers[start], len(order)))
        while heap:
            _, pos = heapq.heappop(heap)
            for u in adj[order[pos - 1]]:
                if not exposed[u]:
                    exposed[u] = True
                    order.append(u)
                    heapq.heappush(heap, (-layers[u], len(order)))
        while nxt < g.n and exposed[nxt]:
            nxt += 1
        if nxt == g.n:
            return order
        start = nxt


def exposure_stats(layer_seq: np.ndarray, L: int, t_min: int) -> tuple[int, float]:
    """Violations of ``|S^t_l| > 2t/L`` over ``t_min <= t <= len`` and the max of ``L |S^t_l| / t``."""
    t_total = len(layer_seq)
    onehot = np.zeros((t_total, L), dtype=np.int32)
    onehot[np.arange(t_total), np.asarray(layer_seq) - 1] = 1
    counts = np.cumsum(onehot, axis=0)[t_min - 1:]
    t = np.arange(t_min, t_total + 1, dtype=np.int64)[:, None]
    violations = int(np.count_nonzero(L * counts.astype(np.int64) > 2 * t))
    return violations, float((L * counts / t).max())


def _exposure_units(cfg):
    return list(range(cfg.trials))


def _exposure_block(cfg, units):
    rep = Report("exposure")
    q = Quantizer(cfg.L)
    rep.bump("violations", 0)
    rep.bump("exposures_checked", 0)
    rep.bump("skipped", 0)
    ratios = rep.stat("max_ratio", bin_width=0.01)
    for i in units:
        g = _instance(cfg, _graph_index(cfg, i))
        seed = child_seed(cfg.base_seed, _RANK, i)
        root = child_seed(cfg.base_seed, _ROOT, i) % g.n
        o = RankOracle(seed, g.n, cfg.mode)
        if cfg.source == "synthetic":
            layers = q.quantize_array(o.ranks())
            seq = layers[adaptive_exposure(g, layers.tolist(), root)]
        else:
            tr = query_tree_quantized(g, o, q, root)
            seq = np.array([tr.layers[u] for u in tr.exposure_order])
        t_min = max(1, math.ceil(cfg.c * _log_n(g.n)))
        if len(seq) < t_min:
            rep.bump("skipped")
            continue
        violations, max_ratio = exposure_stats(seq, cfg.L, t_min)
        rep.bump("violations", violations)
        rep.bump("exposures_checked")
        ratios.add(max_ratio)
        rep.cell(g.n, cfg.d, cfg.L, seed, "violations", violations)
        rep.cell(g.n, cfg.d, cfg.L, seed, "max_ratio", max_ratio)
    return rep


def _exposure_finalize(cfg, rep):
    rep.checks.append(check("exposure concentration violations", rep.counters["violations"], "==", 0))
    if not rep.counters["exposures_checked"]:
        rep.notes.append("no exposure reached c log n vertices; experiment skipped")
    rep.diagnostics = {
        "max_ratio_hist": [[k, v] for k, v in sorted(rep.stats["max_ratio"].hist.items())],
        "max_ratio_max": rep.stats["max_ratio"].max,
    }


# -- monotone paths -------------------------------------------------------------------------------


def _paths_units(cfg):
    if not 0 <= cfg.k_max <= 8:
        raise ConfigError("paths needs 0 <= k_max <= 8")
    return list(range(cfg.trials))


def _paths_block(cfg, units):
    rep = Report("paths")
    for i in units:
        g = _instance(cfg, _graph_index(cfg, i))
        seed = child_seed(cfg.base_seed, _RANK, i)
        root = child_seed(cfg.base_seed, _ROOT, i) % g.n
        counts = count_monotone_paths(g, RankOracle(seed, g.n, cfg.mode), root, cfg.k_max)
        for k, c in enumerate(counts):
            rep.stat(f"paths/k={k}").add(c)
            rep.cell(g.n, cfg.d, cfg.L, seed, f"paths_k{k}", c)
    return rep


def _paths_finalize(cfg, rep):
    d = cfg.d
    vertices = 0.0
    per_k = {}
    for k in range(cfg.k_max + 1):
        st = rep.stats[f"paths/k={k}"]
        bound = d**k / math.factorial(k + 1)
        rep.checks.append(
            check(f"k={k}: mean - {cfg.sigma:g} stderr <= d^k/(k+1)!", st.mean - cfg.sigma * st.stderr, "<=", bound)
        )
        vertices += (k + 1) * st.mean
        per_k[str(k)] = {"mean": st.mean, "stderr": st.stderr, "bound": bound}
    rep.diagnostics = {"per_k": per_k, "sum_k_(k+1)_mean": vertices, "e_d": math.exp(d)}


# -- seed length -------------------------------------------------------------------------------------


def _seedlen_units(cfg):
    modes = [parse_mode(m) for m in cfg.modes]
    if len(modes) < 2 or len(set(modes)) != len(modes):
        raise ConfigError("seedlen needs at least two distinct rank modes")
    return list(range(cfg.trials))


def _seedlen_block(cfg, units):
    rep = Report("seedlen")
    for i in units:
        g = _instance(cfg, _graph_index(cfg, i))
        root = child_seed(cfg.base_seed, _ROOT, i) % g.n
        seed = child_seed(cfg.base_seed, _RANK, i)
        for m in cfg.modes:
            size = len(query_tree_exact(g, RankOracle(seed, g.n, m), root))
            rep.stat(f"tree_size/{m}").add(size)
            rep.cell(g.n, cfg.d, cfg.L, seed, f"tree_size_{m}", size)
    return rep


def _seedlen_finalize(cfg, rep):
    ref = rep.stats[f"tree_size/{cfg.modes[0]}"]
    bound = math.exp(cfg.d)
    per_mode = {}
    for m in cfg.modes:
        st = rep.stats[f"tree_size/{m}"]
        rep.checks.append(check(f"{m}: mean + {cfg.sigma:g} stderr <= e^d", st.mean + cfg.sigma * st.stderr, "<=", bound))
        per_mode[m] = {"mean": st.mean, "stderr": st.stderr}
    for m in cfg.modes[1:]:
        st = rep.stats[f"tree_size/{m}"]
        dist = ks_distance(ref.hist, st.hist)
        crit = ks_critical(cfg.alpha, ref.count, st.count)
        rep.checks.append(check(f"KS({cfg.modes[0]}, {m}) < critical value at alpha={cfg.alpha:g}", dist, "<", crit))
        per_mode[m].update({"ks": dist, "ks_critical": crit})
    rep.diagnostics = {"per_mode": per_mode, "bound_e_d": bound}


# -- LCA probes -------------------------------------------------------------------------------------------


def _lca_units(cfg):
    if len(cfg.n_list) < 2:
        raise ConfigError("lca needs an n_list with at least 2 sizes")
    return [(n, s) for n in cfg.n_list for s in range(cfg.trials)]


def _lca_block(cfg, units):
    rep = Report("lca")
    for n, s in units:
        g = _instance(cfg, s, n)
        seed = child_seed(cfg.base_seed, _RANK, n, s)
        o = RankOracle(seed, g.n, cfg.mode).materialize()
        explored = max(mis_query(g, o, v).explored for v in range(g.n))
        reverse = max(tree_sizes(g, o, reverse=True))
        rep.stat(f"max_explored/n={n}").add(explored)
        rep.stat(f"tmax_reverse/n={n}").add(reverse)
        rep.cell(n, cfg.d, cfg.L, seed, "max_explored", explored)
        rep.cell(n, cfg.d, cfg.L, seed, "tmax_reverse", reverse)
    return rep


def _lca_finalize(cfg, rep):
    ns = sorted(set(cfg.n_list))
    explored = [rep.stats[f"max_explored/n={n}"].median() for n in ns]
    reverse = [rep.stats[f"tmax_reverse/n={n}"].median() for n in ns]
    corr = _pearson(explored, reverse)
    rep.checks.append(check("correlation of median max-explored with median reverse T_max", corr, ">=", 0.9))
    rep.diagnostics = {"n": ns, "median_max_explored": explored, "median_tmax_reverse": reverse, "correlation": corr}


# -- runner --------------------------------------------------------------------------------------------------

_REGISTRY = {
    "expectation": (_expectation_units, _expectation_block, _expectation_finalize),
    "tmax": (_tmax_units, _tmax_block, _tmax_finalize),
    "layers": (_layers_units, _layers_block, _layers_finalize),
    "exposure": (_exposure_units, _exposure_block, _exposure_finalize),
    "paths": (_paths_units, _paths_block, _paths_finalize),
    "seedlen": (_seedlen_units, _seedlen_block, _seedlen_finalize),
    "lca": (_lca_units, _lca_block, _lca_finalize),
}


def resolve_threads(value: str | int | None) -> int:
    """``--threads`` value, falling back to ``QTREE_THREADS`` and then 1."""
    if value is None:
        value = os.environ.get("QTREE_THREADS", "1")
    if isinstance(value, str):
        if value.strip().lower() == "auto":
            return os.cpu_count() or 1
        try:
            value = int(value)
        except ValueError:
            raise ConfigError(f"invalid thread count {value!r}") from None
    if value < 1:
        raise ConfigError("thread count must be >= 1")
    return value


def _run_block(args):
    cfg, units = args
    return _REGISTRY[cfg.experiment][1](cfg, units)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> Report:
    units_fn, _, finalize = _REGISTRY[cfg.experiment]
    units = units_fn(cfg)
    blocks = [(cfg, units[i:i + cfg.block]) for i in range(0, len(units), cfg.block)]
    started = time.perf_counter()
    if threads > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_block, blocks))
    else:
        parts = [_run_block(b) for b in blocks]
    rep = parts[0]
    for part in parts[1:]:
        rep = rep.merge(part)
    rep.config = cfg.to_dict()
    finalize(cfg, rep)
    rep.notes.append(
        "tail probabilities of order 1/n^2..1/n^4 are not estimated directly; "
        "checks assert zero exceedances of the explicit thresholds"
    )
    log.info("%s: %d trials in %.2fs", cfg.experiment, len(units), time.perf_counter() - started)
    return rep
