"""``qtree`` command line.

Exit status: 0 on success, 1 when a check or consistency test fails (or a
graph file is rejected by ``validate``), 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from qtree.experiments import EXPERIMENTS, ConfigError, ExperimentConfig, resolve_threads, run_experiment
from qtree.graph import (
    FormatError,
    GenerationError,
    GraphSpec,
    InputError,
    ParameterError,
    build_graph,
    load_graph,
    save_graph,
)
from qtree.lca import mis_query, verify_consistency
from qtree.query_tree import query_tree_exact, query_tree_quantized
from qtree.ranks import Quantizer, RankOracle, default_L, parse_seed

log = logging.getLogger("qtree")


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    try:
        return parse_seed(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_seed, default=None, help="64-bit seed, decimal or 0x-hex")
    p.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    p.add_argument("--out", default=None, help="write the primary output to this path")
    p.add_argument("--threads", default=None, help="worker count or 'auto' (env QTREE_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtree", description="Query trees on bounded-degree graphs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a graph as an edge list")
    _common(p)
    p.add_argument("--type", required=True, choices=["regular", "cycle", "grid", "capped-random"])
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--p", type=float)

    p = sub.add_parser("tree", help="compute one query tree")
    _common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--root", type=int, required=True)
    p.add_argument("--mode", choices=["exact", "quantized"], default="exact")
    p.add_argument("--L", type=int, default=None, help="layer count (default 4(d+1))")
    p.add_argument("--rank-mode", default="full", help="'full' or 'kwise:<k>'")

    p = sub.add_parser("lca", help="local computation queries")
    lsub = p.add_subparsers(dest="problem", required=True)
    m = lsub.add_parser("mis", help="greedy maximal independent set membership")
    _common(m)
    m.add_argument("--graph", required=True)
    which = m.add_mutually_exclusive_group(required=True)
    which.add_argument("--vertex", type=int)
    which.add_argument("--all", action="store_true")
    m.add_argument("--check", action="store_true", help="compare with the sequential greedy MIS")
    m.add_argument("--rank-mode", default="full")

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    _common(p)
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON config; flags given here override it")
    p.add_argument("--graph-type", choices=["regular", "cycle", "grid", "capped-random", "file"])
    p.add_argument("--graph", help="edge-list file (implies --graph-type file)")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--n-list", help="comma-separated sizes")
    p.add_argument("--rank-mode")
    p.add_argument("--modes", help="comma-separated rank modes for seedlen")
    p.add_argument("--quantized", action="store_true", default=None)
    p.add_argument("--graphs", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--source", choices=["synthetic", "trace"])
    p.add_argument("--csv", help="write per-cell CSV rows to this path")

    p = sub.add_parser("validate", help="check an edge-list file")
    _common(p)
    p.add_argument("--graph", required=True)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def cmd_gen(args) -> int:
    kind = args.type
    spec = GraphSpec(
        kind=kind,
        n=args.n,
        d=args.d if kind != "cycle" else None,
        rows=args.rows,
        cols=args.cols,
        p=args.p,
        seed=args.seed or 0,
    )
    g = build_graph(spec)
    if args.out:
        save_graph(g, args.out)
    else:
        lines = [f"{g.n} {g.m} {g.d_bound}"] + [f"{u} {v}" for u, v in g.edges()]
        sys.stdout.write("\n".join(lines) + "\n")
    log.info("generated %r from %s", g, spec.to_dict())
    return 0


def cmd_tree(args) -> int:
    g = load_graph(args.graph)
    seed = args.seed or 0
    o = RankOracle(seed, g.n, args.rank_mode)
    L = args.L if args.L is not None else default_L(g.d_bound)
    if args.mode == "exact":
        T = query_tree_exact(g, o, args.root)
        payload = {"root": args.root, "T": sorted(T), "size": len(T)}
    else:
        payload = query_tree_quantized(g, o, Quantizer(L), args.root).to_dict()
        payload["size"] = len(payload["T"])
    payload.update({"mode": args.mode, "rank_mode": o.mode_name, "seed": seed, "L": L, "d": g.d_bound})
    if args.json:
        _emit(_dump(payload), args.out)
    else:
        text = (
            f"config: mode={args.mode} rank_mode={o.mode_name} seed={seed} d={g.d_bound} L={L}\n"
            f"root {args.root}: |T| = {payload['size']}\n"
            f"T: {' '.join(map(str, payload['T']))}\n"
        )
        if args.mode == "quantized":
            text += f"|R| = {len(payload['R'])}, probes = {payload['probes']}\n"
        _emit(text, args.out)
    return 0


def cmd_lca(args) -> int:
    g = load_graph(args.graph)
    seed = args.seed or 0
    o = RankOracle(seed, g.n, args.rank_mode)
    vertices = range(g.n) if args.all else [args.vertex]
    answers = [mis_query(g, o, v) for v in vertices]
    payload = {"seed": seed, "rank_mode": o.mode_name, "answers": [a.to_dict() for a in answers]}
    status = 0
    if args.check:
        rep = verify_consistency(g, o)
        payload["check"] = rep.to_dict()
        status = 0 if rep.consistent else 1
    if args.json:
        _emit(_dump(payload), args.out)
    else:
        lines = [f"config: seed={seed} rank_mode={o.mode_name} n={g.n} d={g.d_bound}"]
        lines += [f"{a.vertex} in_mis={a.in_mis} probes={a.probes} explored={a.explored}" for a in answers]
        if args.check:
            c = payload["check"]
            lines.append(
                f"check: {'consistent' if c['consistent'] else 'INCONSISTENT'} "
                f"mis_size={c['mis_size']} mismatches={c['mismatches']}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return status


def _experiment_config(args) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        if data.get("experiment", args.name) != args.name:
            raise ConfigError(f"config is for {data['experiment']!r}, not {args.name!r}")
    data["experiment"] = args.name
    graph = dict(data.get("graph", {}))
    if args.graph:
        graph = {"kind": "file", "path": args.graph}
    if args.graph_type:
        graph["kind"] = args.graph_type
    for key in ("n", "d", "rows", "cols", "p"):
        value = getattr(args, key)
        if value is not None:
            graph[key] = value
    if graph.get("kind") == "cycle":
        graph.pop("d", None)
    if args.d is not None:
        data["d"] = args.d
    if "kind" not in graph:
        raise ConfigError("no graph given (use --graph-type or --graph or a config file)")
    try:
        if args.n_list:
            data["n_list"] = [int(x) for x in args.n_list.split(",") if x.strip()]
        if args.modes:
            data["modes"] = [m.strip() for m in args.modes.split(",") if m.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    # sweeps set n per size, so the graph's own n is only a placeholder
    if data.get("n_list") and graph["kind"] in ("regular", "capped-random") and "n" not in graph:
        graph["n"] = min(data["n_list"])
    data["graph"] = graph
    if args.seed is not None:
        data["base_seed"] = args.seed
    simple = {
        "L": args.L,
        "c": args.c,
        "trials": args.trials,
        "mode": args.rank_mode,
        "quantized": args.quantized,
        "graphs": args.graphs,
        "k_max": args.k_max,
        "alpha": args.alpha,
        "source": args.source,
    }
    data.update({k: v for k, v in simple.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    threads = resolve_threads(args.threads)
    rep = run_experiment(cfg, threads=threads)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(rep.to_csv())
    if args.json:
        _emit(rep.to_json(), args.out)
    else:
        lines = [f"config: {json.dumps(rep.config, sort_keys=True)}"]
        lines += rep.summary_lines()
        lines += [f"note: {n}" for n in rep.notes]
        lines.append("PASS" if rep.passed else "FAIL")
        _emit("\n".join(lines) + "\n", args.out)
    return 0 if rep.passed else 1


def cmd_validate(args) -> int:
    try:
        g = load_graph(args.graph)
    except FormatError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        if args.json:
            _emit(_dump({"valid": False, "error": str(exc), "line": exc.line}), args.out)
        return 1
    payload = {"valid": True, "n": g.n, "m": g.m, "d": g.d_bound, "max_degree": g.max_degree()}
    if args.json:
        _emit(_dump(payload), args.out)
    else:
        _emit(f"valid: n={g.n} m={g.m} d={g.d_bound} max_degree={g.max_degree()}\n", args.out)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "tree": cmd_tree,
    "lca": cmd_lca,
    "experiment": cmd_experiment,
    "validate": cmd_validate,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterError, GenerationError, FormatError, InputError, ValueError, OSError) as exc:
        print(f"qtree: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
