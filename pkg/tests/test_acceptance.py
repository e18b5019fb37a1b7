"""Acceptance criteria at full scale.

Each test appends one PASS/FAIL line to ``conftest.ACCEPTANCE_LINES`` (printed
in the terminal summary) and then asserts both the criterion and its runtime
budget. Run just this file with ``pytest -m acceptance -s``.
"""

import math
import random
import time

import networkx as nx
import pytest

from conftest import ACCEPTANCE_LINES
from qtree.experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from qtree.graph import Graph, gen_capped_random, gen_cycle, gen_grid, gen_random_regular
from qtree.lca import verify_consistency
from qtree.query_tree import (
    query_tree_bfs_oracle,
    query_tree_exact,
    query_tree_quantized,
    trace_violations,
)
from qtree.ranks import FixedRanks, Quantizer, RankOracle, child_seed, default_L

pytestmark = pytest.mark.acceptance


def record(num: int, title: str, ok: bool, detail: str, elapsed: float, budget: float) -> None:
    in_time = elapsed < budget
    status = "PASS" if ok and in_time else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] {num:2d}. {title}: {detail} ({elapsed:.1f}s, budget {budget:.0f}s)")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail
    assert in_time, f"took {elapsed:.1f}s, budget {budget}s"


def run(cfg_dict: dict, threads: int = 1):
    return run_experiment(ExperimentConfig.from_dict(cfg_dict), threads=threads)


# -- instance sets shared by criteria 2 and 3 ------------------------------------------------------


def atlas_graphs():
    """All connected graphs on 1..6 vertices up to isomorphism."""
    out = []
    for h in nx.graph_atlas_g():
        n = h.number_of_nodes()
        if 1 <= n <= 6 and nx.is_connected(h):
            out.append(Graph.from_edges(n, list(h.edges())))
    return out


def random_pool(rng: random.Random, size: int = 60):
    pool = []
    for i in range(size):
        n = int(10 ** rng.uniform(1, 3))
        kind = i % 4
        if kind == 0:
            d = rng.choice([2, 3, 4])
            n += (n * d) % 2
            pool.append(gen_random_regular(n, d, seed=i))
        elif kind == 1:
            pool.append(gen_cycle(max(n, 3)))
        elif kind == 2:
            side = max(2, int(math.sqrt(n)))
            pool.append(gen_grid(side, max(2, n // side)))
        else:
            pool.append(gen_capped_random(n, 4.0 / n, rng.choice([3, 4, 5]), seed=i))
    return pool


def instances():
    """Yield (graph, ranks, root, Ls) over the exhaustive and random instance sets."""
    for j, g in enumerate(atlas_graphs()):
        Ls = sorted({1, 2, default_L(g.d_bound)})
        for s in range(50):
            o = RankOracle(child_seed(7, j, s), g.n)
            for v in range(g.n):
                yield g, o, v, Ls
    rng = random.Random(2024)
    pool = random_pool(rng)
    for t in range(10_000):
        g = pool[rng.randrange(len(pool))]
        if t % 5 == 0:
            # coarse ranks force many ties
            o = FixedRanks([rng.randrange(4) / 4 for _ in range(g.n)])
        else:
            o = RankOracle(rng.getrandbits(64), g.n)
        yield g, o, rng.randrange(g.n), (1, 2, default_L(g.d_bound))


# -- criteria -------------------------------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 4])
def test_01_expectation_bound(d):
    t0 = time.perf_counter()
    rep = run({"experiment": "expectation", "graph": {"kind": "regular", "n": 10_000, "d": d},
               "trials": 10_000, "base_seed": 101 + d})
    diag = rep.diagnostics
    upper = diag["mean"] + 3 * diag["stderr"]
    record(1, f"E|T_v| <= e^d (d={d})", rep.passed and upper <= math.exp(d),
           f"mean {diag['mean']:.3f} + 3se = {upper:.3f} <= {math.exp(d):.3f}", time.perf_counter() - t0, 120)


def test_02_quantization_containment():
    t0 = time.perf_counter()
    cases = failures = 0
    for g, o, v, Ls in instances():
        exact = query_tree_exact(g, o, v)
        for L in Ls:
            cases += 1
            failures += not exact <= query_tree_quantized(g, o, Quantizer(L), v).T
    record(2, "T_v subset of T_v^f", failures == 0, f"{cases - failures}/{cases} contained",
           time.perf_counter() - t0, 60)


def test_03_oracle_equivalence():
    t0 = time.perf_counter()
    cases = failures = 0
    for g, o, v, Ls in instances():
        cases += 1
        failures += query_tree_exact(g, o, v) != query_tree_bfs_oracle(g, o, v)
        for L in Ls:
            q = Quantizer(L)
            cases += 1
            failures += query_tree_quantized(g, o, q, v).T != query_tree_bfs_oracle(g, o, v, quantized=q)
    record(3, "lazy explorers match BFS oracle", failures == 0, f"{cases - failures}/{cases} agree",
           time.perf_counter() - t0, 60)


def test_04_layer_identity_and_boundary():
    t0 = time.perf_counter()
    rng = random.Random(404)
    pool = random_pool(rng, 40)
    bad = []
    for t in range(10_000):
        g = pool[rng.randrange(len(pool))]
        L = rng.choice([1, 2, 3, default_L(g.d_bound)])
        o = RankOracle(rng.getrandbits(64), g.n)
        trace = query_tree_quantized(g, o, Quantizer(L), rng.randrange(g.n), order=rng.choice(["fifo", "lifo"]))
        problems = trace_violations(g, trace)
        if problems:
            bad.append((t, problems[0]))
    detail = "10000/10000 traces sound" if not bad else f"{len(bad)} bad traces, first {bad[0]}"
    record(4, "layer identity and |R| <= (d+1)|T|", not bad, detail, time.perf_counter() - t0, 60)


N_LIST = [2**k for k in range(10, 18)]


@pytest.fixture(scope="module")
def tmax_sweep():
    t0 = time.perf_counter()
    rep = run({"experiment": "tmax", "graph": {"kind": "regular", "n": N_LIST[0], "d": 3},
               "n_list": N_LIST, "trials": 20, "base_seed": 505})
    return rep, time.perf_counter() - t0


def test_05_threshold_non_exceedance(tmax_sweep):
    rep, elapsed = tmax_sweep
    worst = max(v["max"] / v["threshold"] for v in rep.diagnostics["per_n"].values())
    exceed = rep.counters["exceedances"]
    record(5, "no T_max above 2^L 15L log n", exceed == 0,
           f"{exceed} exceedances in {20 * len(N_LIST)} runs, largest max/threshold {worst:.3g}", elapsed, 300)


def test_06_logarithmic_scaling(tmax_sweep):
    rep, elapsed = tmax_sweep
    diag = rep.diagnostics
    corr, growth = diag["correlation_log_n"], diag["growth_ratio_last_first"]
    record(6, "median T_max ~ log n", corr >= 0.95 and growth < 4,
           f"corr {corr:.3f} >= 0.95, median ratio 2^17/2^10 = {growth:.2f} < 4", elapsed, 900)


def test_07_exposure_concentration():
    t0 = time.perf_counter()
    rep = run({"experiment": "exposure", "graph": {"kind": "regular", "n": 100_000, "d": 3},
               "L": 16, "trials": 100, "base_seed": 707})
    c = rep.counters
    ok = c["violations"] == 0 and c["exposures_checked"] == 100
    record(7, "exposure concentration", ok,
           f"{c['violations']} violations over {c['exposures_checked']} exposures, "
           f"max L|S_l|/t {rep.diagnostics['max_ratio_max']:.3f} (limit 2)", time.perf_counter() - t0, 120)


def test_08_monotone_paths():
    t0 = time.perf_counter()
    rep = run({"experiment": "paths", "graph": {"kind": "regular", "n": 10_000, "d": 3},
               "trials": 10_000, "k_max": 5, "base_seed": 808})
    per_k = rep.diagnostics["per_k"]
    ok = all(per_k[str(k)]["mean"] - 3 * per_k[str(k)]["stderr"] <= per_k[str(k)]["bound"] for k in range(6))
    detail = ", ".join(f"k={k}: {per_k[str(k)]['mean']:.3f}/{per_k[str(k)]['bound']:.3f}" for k in range(6))
    record(8, "monotone paths <= d^k/(k+1)!", ok and rep.passed, detail, time.perf_counter() - t0, 120)


def test_09_lca_consistency():
    t0 = time.perf_counter()
    graphs = [gen_random_regular(500, 3, seed=900 + i) for i in range(50)] + [gen_cycle(500)] * 50
    good = 0
    for i, g in enumerate(graphs):
        rep = verify_consistency(g, RankOracle(child_seed(909, i), g.n).materialize())
        good += rep.consistent and rep.independent and rep.maximal and not rep.mismatches
    record(9, "LCA answers form the greedy MIS", good == 100, f"{good}/100 instances consistent",
           time.perf_counter() - t0, 60)


def test_10_seed_length():
    t0 = time.perf_counter()
    rep = run({"experiment": "seedlen", "graph": {"kind": "regular", "n": 10_000, "d": 3},
               "trials": 10_000, "modes": ["full", "kwise:4"], "alpha": 1e-3, "base_seed": 1010})
    kw = rep.diagnostics["per_mode"]["kwise:4"]
    kw_upper = kw["mean"] + 3 * kw["stderr"]
    ok = rep.passed and kw["ks"] < kw["ks_critical"] and kw_upper <= math.exp(3)
    record(10, "full vs kwise:4 tree sizes", ok,
           f"KS {kw['ks']:.4f} < {kw['ks_critical']:.4f}, kwise mean + 3se {kw_upper:.3f} <= {math.exp(3):.3f}",
           time.perf_counter() - t0, 180)


SMALL = {
    "expectation": {"graph": {"kind": "regular", "n": 400, "d": 3}, "trials": 300},
    "tmax": {"graph": {"kind": "regular", "n": 64, "d": 3}, "n_list": [64, 128, 256, 512], "trials": 5},
    "layers": {"graph": {"kind": "capped-random", "n": 300, "d": 4, "p": 0.01}, "trials": 300},
    "exposure": {"graph": {"kind": "regular", "n": 2000, "d": 3}, "trials": 10},
    "paths": {"graph": {"kind": "grid", "rows": 20, "cols": 20}, "trials": 300},
    "seedlen": {"graph": {"kind": "regular", "n": 400, "d": 3}, "trials": 300},
    "lca": {"graph": {"kind": "cycle", "n": 50}, "n_list": [50, 100, 200], "trials": 4, "graphs": 4},
}


def test_11_reproducibility():
    t0 = time.perf_counter()
    mismatched = []
    for name in EXPERIMENTS:
        cfg = {"experiment": name, "base_seed": "0xfeed", "block": 16, **SMALL[name]}
        outputs = []
        for threads in (1, 1, 2):
            rep = run(cfg, threads=threads)
            outputs.append((rep.to_json(), rep.to_csv()))
        if len(set(outputs)) != 1:
            mismatched.append(name)
    ok = not mismatched
    detail = f"{len(EXPERIMENTS)} experiments byte-identical across reruns and 1 vs 2 workers"
    if mismatched:
        detail = f"differing output: {', '.join(mismatched)}"
    record(11, "reproducible JSON/CSV", ok, detail, time.perf_counter() - t0, 60)
