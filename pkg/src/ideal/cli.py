"""Command-line pipeline: build-graph, select, influence, retrieve,
auto-annotate, verify.

Every run is a pure function of its input files, flags, and seed; re-running
with the same inputs produces byte-identical artifacts apart from the
``metadata`` field (wall time).  Exit codes: 0 success, 1 check failure,
2 usage/validation, 3 I/O.  ``IDEAL_SEED`` is the seed fallback when
``--seed`` is omitted.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .diffusion import (
    DEFAULT_REPS,
    cascade_stream,
    estimate_influence,
    export_cascade_trace,
    simulate_cascade,
)
from .embeddings import load_embeddings
from .graph import build_graph, load_graph, save_graph
from .guarantees import run_verification
from .retrieval import build_index, random_retrieve, retrieve_scored
from .schedule import DEFAULT_PROMPTS_PER_TARGET, diffusion_schedule
from .selection import (
    METHODS,
    brute_force_optimal,
    fast_votek_select,
    greedy_select,
    kmeans_select,
    knn_lists,
    mfl_select,
    random_select,
)

DEFAULT_K = 10


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("IDEAL_SEED", "0"))


def _require_file(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise UsageError(f"{what} file not found: {path}")
    return path


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _read_id_list(path: str) -> list[str]:
    with open(_require_file(path, "subset"), "r", encoding="utf-8") as fh:
        text = fh.read().strip()
    if not text:
        return []
    if text.startswith("{"):
        payload = json.loads(text)
        if "selected" in payload:
            return [str(x) for x in payload["selected"]]
        if "manual" in payload:
            return [str(x) for x in payload["manual"]]
        raise UsageError(f"no 'selected' or 'manual' field in {path}")
    if text.startswith("["):
        return [str(x) for x in json.loads(text)]
    return [tok for tok in text.split() if tok]


def _ids_to_indices(tokens: list[str], pool, n: int) -> list[int]:
    indices = []
    for tok in tokens:
        if pool is not None:
            try:
                indices.append(pool.index_of(tok))
                continue
            except KeyError:
                raise UsageError(f"unknown id {tok!r}") from None
        try:
            v = int(tok)
        except ValueError:
            raise UsageError(
                f"unknown id {tok!r} (pass --embeddings to map string ids)"
            ) from None
        if not 0 <= v < n:
            raise UsageError(f"vertex {v} out of range for n={n}")
        indices.append(v)
    return indices


def _load_pool(args):
    if not args.embeddings:
        raise UsageError("--embeddings is required for this subcommand")
    return load_embeddings(
        _require_file(args.embeddings, "embeddings"), args.format
    )


def _graph_for(args, pool):
    if getattr(args, "graph", None):
        g = load_graph(_require_file(args.graph, "graph"))
        if pool is not None and g.built_from and g.built_from != pool.content_hash():
            raise UsageError(
                "graph hash does not match the embeddings file; "
                "rebuild with `ideal build-graph`"
            )
        if pool is not None and g.n != pool.n:
            raise UsageError(f"graph has {g.n} vertices, pool has {pool.n}")
        return g
    if pool is None:
        raise UsageError("either --graph or --embeddings is required")
    return build_graph(pool, args.k)


def cmd_build_graph(args) -> int:
    started = time.perf_counter()
    pool = _load_pool(args)
    g = build_graph(pool, args.k)
    save_graph(g, args.out)
    elapsed = (time.perf_counter() - started) * 1000.0
    config = {
        "subcommand": "build-graph",
        "embeddings": args.embeddings,
        "format": args.format,
        "k": args.k,
        "out": args.out,
    }
    print(json.dumps({"config": config}))
    print(
        f"graph: n={g.n} k={g.k} edges={g.num_edges} "
        f"hash={g.built_from[:12]} build_time_ms={elapsed:.1f}"
    )
    return 0


def cmd_select(args) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    pool = _load_pool(args)
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; expected {METHODS}")
    m = args.budget
    if args.method in ("ideal", "ideal-lazy", "brute-force"):
        g = _graph_for(args, pool)
        if args.method == "brute-force":
            result = brute_force_optimal(g, m)
        else:
            result = greedy_select(
                g,
                m,
                reps=args.reps,
                seed=seed,
                lazy=args.method == "ideal-lazy",
                threads=args.threads,
            )
    elif args.method == "random":
        result = random_select(pool.n, m, seed)
    elif args.method == "kmeans":
        result = kmeans_select(pool, m, seed)
    elif args.method == "mfl":
        result = mfl_select(pool, m)
    else:
        result = fast_votek_select(knn_lists(pool, args.k), m, args.rho)
    config = {
        "subcommand": "select",
        "embeddings": args.embeddings,
        "graph": args.graph,
        "method": args.method,
        "budget": m,
        "k": args.k,
        "reps": args.reps,
        "seed": seed,
        "rho": args.rho,
        "out": args.out,
    }
    payload = {
        "config": config,
        "method": result.method,
        "budget": result.budget,
        "selected": [pool.ids[v] for v in result.selected],
        "marginal_gains": result.marginal_gains,
        "seed": result.seed,
        "evaluations": result.evaluations,
        # threads is an execution detail: outputs are thread-count invariant
        "metadata": {
            "wall_time_ms": (time.perf_counter() - started) * 1000.0,
            "threads": args.threads,
        },
    }
    _write_json(args.out, payload)
    print(
        f"selected {len(result.selected)} of {pool.n} by {result.method} "
        f"(evaluations={result.evaluations}, "
        f"wall_time_ms={result.wall_time * 1000.0:.1f})"
    )
    return 0


def cmd_influence(args) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    pool = (
        load_embeddings(_require_file(args.embeddings, "embeddings"), args.format)
        if args.embeddings
        else None
    )
    g = _graph_for(args, pool)
    tokens = _read_id_list(args.subset)
    if not tokens:
        raise UsageError(f"subset file {args.subset} is empty")
    subset = _ids_to_indices(tokens, pool, g.n)
    est = estimate_influence(g, subset, reps=args.reps, seed=seed)
    print(
        f"influence mean={est.mean:.6f} +/- {est.std_error:.6f} "
        f"(reps={est.reps}, seed={est.seed}, subset_size={est.subset_size})"
    )
    if args.trace_out:
        trace = simulate_cascade(g, subset, cascade_stream(seed, subset))
        export_cascade_trace(trace, args.trace_out)
    if args.out:
        config = {
            "subcommand": "influence",
            "graph": args.graph,
            "embeddings": args.embeddings,
            "subset": args.subset,
            "reps": args.reps,
            "seed": seed,
            "out": args.out,
        }
        _write_json(
            args.out,
            {
                "config": config,
                "mean": est.mean,
                "std_error": est.std_error,
                "reps": est.reps,
                "seed": est.seed,
                "subset_size": est.subset_size,
                "metadata": {
                    "wall_time_ms": (time.perf_counter() - started) * 1000.0
                },
            },
        )
    return 0


def cmd_retrieve(args) -> int:
    seed = _resolve_seed(args)
    pool = _load_pool(args)
    annotated = _read_id_list(args.selection)
    if not annotated:
        raise UsageError(f"selection file {args.selection} lists no ids")
    index = build_index(pool, annotated)
    queries = load_embeddings(_require_file(args.queries, "queries"), args.format)
    lines = []
    for ordinal, (qid, row) in enumerate(zip(queries.ids, queries.vectors)):
        if args.random:
            # one deterministic draw per query, not one shared sample
            names = random_retrieve(index, args.c, seed + ordinal)
            scored = [(name, _cosine_to(index, name, row)) for name in names]
        else:
            scored = retrieve_scored(index, row, args.c)
        lines.append(
            {
                "query_id": qid,
                "prompts": [name for name, _ in scored],
                "similarities": [sim for _, sim in scored],
            }
        )
    with open(args.out, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(json.dumps(line) + "\n")
    config = {
        "subcommand": "retrieve",
        "embeddings": args.embeddings,
        "selection": args.selection,
        "queries": args.queries,
        "c": args.c,
        "random": args.random,
        "seed": seed,
        "out": args.out,
    }
    print(json.dumps({"config": config}))
    print(f"retrieved prompts for {len(lines)} queries -> {args.out}")
    return 0


def _cosine_to(index, name, query):
    q = np.asarray(query, dtype=float)
    q = q / np.linalg.norm(q)
    sim = float(index.vectors[index.ids.index(name)] @ q)
    return min(1.0, max(-1.0, sim))


def cmd_auto_annotate(args) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    pool = _load_pool(args)
    g = _graph_for(args, pool)
    manual_ids = _read_id_list(args.selection)
    if not manual_ids:
        raise UsageError(f"selection file {args.selection} lists no ids")
    manual = _ids_to_indices(manual_ids, pool, g.n)
    schedule = diffusion_schedule(g, pool, manual, c=args.c, seed=seed)
    config = {
        "subcommand": "auto-annotate",
        "embeddings": args.embeddings,
        "graph": args.graph,
        "selection": args.selection,
        "c": args.c,
        "k": args.k,
        "seed": seed,
        "out": args.out,
    }
    payload = {"config": config}
    payload.update(schedule.to_payload())
    payload["metadata"] = {
        "wall_time_ms": (time.perf_counter() - started) * 1000.0
    }
    _write_json(args.out, payload)
    print(
        f"scheduled {schedule.scheduled_total} of {g.n} examples "
        f"({len(schedule.manual)} manual, {schedule.fallback_count} fallback)"
    )
    return 0


def cmd_verify(args) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    report = run_verification(trials=args.trials, seed=seed)
    print(report.render_table())
    if args.out:
        config = {
            "subcommand": "verify",
            "trials": args.trials,
            "seed": seed,
            "out": args.out,
        }
        payload = {"config": config}
        payload.update(report.to_payload())
        payload["metadata"] = {
            "wall_time_ms": (time.perf_counter() - started) * 1000.0
        }
        _write_json(args.out, payload)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ideal",
        description="Influence-driven selective annotation toolkit.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, *, graph=False, reps=False, budget=False):
        p.add_argument(
            "--embeddings", help="embedding file (jsonl, csv, or raw-f32)"
        )
        p.add_argument(
            "--format",
            default="auto",
            choices=("auto", "jsonl", "csv", "raw-f32"),
            help="embedding file format (default: auto from extension)",
        )
        p.add_argument(
            "--k",
            type=int,
            default=DEFAULT_K,
            help=f"successors per vertex (default: {DEFAULT_K})",
        )
        if graph:
            p.add_argument("--graph", help="prebuilt IDEALGRAPH file")
        if reps:
            p.add_argument(
                "--reps",
                type=int,
                default=DEFAULT_REPS,
                help=f"cascade repetitions per estimate (default: {DEFAULT_REPS})",
            )
        if budget:
            p.add_argument(
                "--budget", type=int, required=True, help="annotation budget m"
            )
        p.add_argument(
            "--threads",
            type=int,
            default=1,
            help="worker thread bound; outputs are identical for any count "
            "(default: 1)",
        )
        p.add_argument(
            "--seed",
            type=int,
            default=None,
            help="master seed (default: 0, or $IDEAL_SEED when set)",
        )

    p = sub.add_parser("build-graph", help="build the k-NN diffusion graph")
    common(p)
    p.add_argument("--out", required=True, help="output graph path")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("select", help="select the annotation subset")
    common(p, graph=True, reps=True, budget=True)
    p.add_argument(
        "--method",
        required=True,
        choices=METHODS,
        help="selection method",
    )
    p.add_argument(
        "--rho",
        type=float,
        default=10.0,
        help="fast-votek discount base (default: 10.0)",
    )
    p.add_argument("--out", required=True, help="output selection JSON")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("influence", help="estimate influence of a subset")
    common(p, graph=True, reps=True)
    p.add_argument(
        "--subset",
        required=True,
        help="subset file: selection JSON, JSON array, or whitespace ids",
    )
    p.add_argument("--trace-out", help="also write one cascade trace (JSON)")
    p.add_argument("--out", help="optional influence JSON artifact")
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("retrieve", help="retrieve prompts for query embeddings")
    common(p)
    p.add_argument("--selection", required=True, help="annotated ids source")
    p.add_argument("--queries", required=True, help="query embedding file")
    p.add_argument(
        "--c", type=int, default=5, help="prompts per query (default: 5)"
    )
    p.add_argument(
        "--random",
        action="store_true",
        help="random retrieval baseline instead of cosine ranking",
    )
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser(
        "auto-annotate", help="diffusion-ordered annotation schedule"
    )
    common(p, graph=True)
    p.add_argument("--selection", required=True, help="manually annotated ids")
    p.add_argument(
        "--c",
        type=int,
        default=DEFAULT_PROMPTS_PER_TARGET,
        help=f"prompt sources per target (default: {DEFAULT_PROMPTS_PER_TARGET})",
    )
    p.add_argument("--out", required=True, help="output schedule JSON")
    p.set_defaults(func=cmd_auto_annotate)

    p = sub.add_parser("verify", help="run the selection-guarantee checks")
    p.add_argument(
        "--trials",
        type=int,
        default=25,
        help="random graphs per check (default: 25)",
    )
    p.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker thread bound; outputs are identical for any count "
        "(default: 1)",
    )
    p.add_argument(
        "--seed",
        type=int,
        default=None,
        help="master seed (default: 0, or $IDEAL_SEED when set)",
    )
    p.add_argument("--out", help="optional report JSON path")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())
