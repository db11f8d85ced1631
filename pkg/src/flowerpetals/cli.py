"""Command-line surface: every pipeline behind one reproducible entry point.

All subcommands emit deterministic JSON (sorted keys, seeds surfaced in the
output) so a rerun with the same inputs and seed is byte-identical. Exit
codes: 0 success, 1 usage error, 2 data error, 3 numerical or saturation
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .complexes import DataError, Graph, clique_lift, incidence_matrix, load_graph
from .isomorphism import distinguish
from .linalg import ConvergenceError, dense_sym_eig
from .model import load_checkpoint, save_checkpoint, strength
from .nullmodel import SaturationError, rewire_to_target
from .operators import build_fp_adjacency, build_fp_laplacian
from .tasks import (
    TrainConfig,
    fit_node_params,
    graph_classify,
    impute_signals,
    load_coauthorship,
    train_node_classification,
)

__all__ = ["run", "main"]

USAGE_ERROR, DATA_ERROR, NUMERIC_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _write_json(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_config(args) -> TrainConfig:
    cfg = TrainConfig.from_json(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        cfg = replace(cfg, seeds=(args.seed,))
    return cfg


def _run_seeded(cfg: TrainConfig, jobs: int, one_seed_fn):
    """Fan seeds out over a thread pool; aggregation stays in seed order."""
    if jobs <= 1 or len(cfg.seeds) <= 1:
        return [one_seed_fn(seed) for seed in cfg.seeds]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one_seed_fn, cfg.seeds))


def _merge_reports(reports):
    from .tasks import MetricsReport

    runs = [run for rep in reports for run in rep.runs]
    flags = sorted({f for rep in reports for f in rep.flags})
    return MetricsReport.from_runs(
        reports[0].task, reports[0].metric, runs, flags, reports[0].extras
    )


def _cmd_lift(args) -> dict:
    g = load_graph(args.edges)
    complex_ = clique_lift(g, args.max_order)
    payload = {"n": g.n, "seed": args.seed or 0}
    for p, count in complex_.counts().items():
        payload[f"n_{p}"] = count
    return payload


def _cmd_spectra(args) -> dict:
    g = load_graph(args.edges)
    complex_ = clique_lift(g, args.max_order)
    orders = {}
    for p in range(1, args.max_order + 1):
        op = build_fp_adjacency(incidence_matrix(complex_, p))
        lap = build_fp_laplacian(op)
        adj_eigs, _ = dense_sym_eig(op.a_tilde.to_dense())
        lap_eigs, _ = dense_sym_eig(lap.to_dense())
        lo = float(min(adj_eigs.min(initial=0.0), lap_eigs.min(initial=0.0)))
        hi = float(max(adj_eigs.max(initial=0.0), lap_eigs.max(initial=0.0)))
        orders[str(p)] = {
            "min_eig": lo,
            "max_eig": hi,
            "psd": bool(lo >= -1e-10 and hi <= 1.0 + 1e-10),
            "isolated_nodes": int(op.isolated.sum()),
        }
    # order-1 closed form: adjacency must equal (norm-adjacency + I) / 2
    op1 = build_fp_adjacency(incidence_matrix(complex_, 1))
    deg = op1.node_degrees.astype(np.float64)
    inv_sqrt = np.zeros_like(deg)
    inv_sqrt[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    dense_a = np.zeros((g.n, g.n))
    for u, v in g.edges:
        dense_a[u, v] = dense_a[v, u] = 1.0
    reference = 0.5 * (inv_sqrt[:, None] * dense_a * inv_sqrt[None, :] + np.eye(g.n))
    if op1.isolated.any():
        reference[op1.isolated, :] = 0.0
        reference[:, op1.isolated] = 0.0
        reference[op1.isolated, op1.isolated] = 0.0
    residual = float(np.max(np.abs(op1.a_tilde.to_dense() - reference)))
    return {
        "n": g.n,
        "orders": orders,
        "p1_closed_form_residual": residual,
        "seed": args.seed or 0,
    }


def _cmd_train(args) -> dict:
    cfg = _load_config(args)
    g = load_graph(args.edges, args.features, args.labels)

    def one_seed(seed):
        return train_node_classification(g, replace(cfg, seeds=(seed,)))

    report = _merge_reports(_run_seeded(cfg, args.jobs, one_seed))
    if args.save_model:
        save_checkpoint(fit_node_params(g, cfg, cfg.seeds[0]), args.save_model)
    payload = report.to_dict()
    payload["seeds"] = list(cfg.seeds)
    payload["config"] = cfg.to_dict()
    return payload


def _cmd_impute(args) -> dict:
    cfg = _load_config(args)
    cc = load_coauthorship(args.simplices)

    def one_seed(seed):
        return impute_signals(cc, cfg.known_fraction, replace(cfg, seeds=(seed,)))

    report = _merge_reports(_run_seeded(cfg, args.jobs, one_seed))
    payload = report.to_dict()
    payload["seeds"] = list(cfg.seeds)
    payload["config"] = cfg.to_dict()
    return payload


def _cmd_graphclass(args) -> dict:
    cfg = _load_config(args)
    graphs, labels = _load_graph_dataset(args.dataset)
    report = graph_classify(graphs, labels, cfg)
    payload = report.to_dict()
    payload["config"] = cfg.to_dict()
    return payload


def _load_graph_dataset(path) -> tuple[list[Graph], np.ndarray]:
    """JSON-lines dataset: one object per graph with n, edges, label,
    optional features."""
    graphs, labels = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
                features = obj.get("features")
                graphs.append(
                    Graph.from_edge_list(
                        obj["n"],
                        [tuple(e) for e in obj["edges"]],
                        features=np.asarray(features, dtype=np.float64)
                        if features is not None
                        else None,
                    )
                )
                labels.append(int(obj["label"]))
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad graph record ({exc})") from None
    return graphs, np.asarray(labels, dtype=np.int64)


def _histogram_payload(rounds) -> list:
    out = []
    for entry in rounds:
        out.append(
            {
                "round": entry["round"],
                "a": {str(p): dict(sorted(c.items())) for p, c in entry["a"].items()},
                "b": {str(p): dict(sorted(c.items())) for p, c in entry["b"].items()},
            }
        )
    return out


def _cmd_shwl(args) -> dict:
    ga = load_graph(args.a)
    gb = load_graph(args.b)
    verdict, rounds = distinguish(ga, gb, args.method, args.max_order)
    return {
        "method": args.method,
        "max_order": args.max_order,
        "verdict": verdict,
        "rounds": _histogram_payload(rounds),
        "seed": args.seed or 0,
    }


def _cmd_rewire(args) -> dict:
    g = load_graph(args.edges)
    seed = args.seed or 0
    graph, log = rewire_to_target(g, args.target_rho2, seed)
    if args.out_edges:
        with open(args.out_edges, "w") as fh:
            fh.write(f"#n={graph.n}\n")
            for u, v in graph.edges:
                fh.write(f"{u}\t{v}\n")
    from .nullmodel import _adjacency_sets, triangle_count

    base = triangle_count(_adjacency_sets(g))
    achieved = triangle_count(_adjacency_sets(graph)) / base - 1.0
    return {
        "seed": seed,
        "target_rho2": args.target_rho2,
        "achieved_rho2": achieved,
        "accepted": len(log.accepted),
        "attempts": log.attempts,
        "chains": [list(c) for c in log.accepted],
    }


def _cmd_strength(args) -> dict:
    params = load_checkpoint(args.model)
    return {
        "p_max": params.p_max,
        "k_max": params.k_max,
        "seed": params.seed,
        "strength": [float(s) for s in strength(params)],
    }


def _build_parser() -> _Parser:
    parser = _Parser(prog="flowerpetals", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_default=None):
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("lift", help="clique-lift a graph and report simplex counts")
    p.add_argument("--edges", required=True)
    p.add_argument("--max-order", "-p", type=int, default=2)
    common(p)

    p = sub.add_parser("spectra", help="spectral summary of the petal operators")
    p.add_argument("--edges", required=True)
    p.add_argument("--max-order", "-p", type=int, default=2)
    common(p)

    p = sub.add_parser("train", help="node classification pipeline")
    p.add_argument("--edges", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--config")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--save-model")
    common(p)

    p = sub.add_parser("impute", help="simplicial signal imputation pipeline")
    p.add_argument("--simplices", required=True)
    p.add_argument("--config")
    p.add_argument("--jobs", type=int, default=1)
    common(p)

    p = sub.add_parser("graphclass", help="graph classification pipeline")
    p.add_argument("--dataset", required=True, help="JSON-lines graph records")
    p.add_argument("--config")
    common(p)

    p = sub.add_parser("shwl", help="pairwise isomorphism refinement verdict")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--method", choices=("wl", "hwl", "shwl"), default="shwl")
    p.add_argument("--max-order", "-p", type=int, default=2)
    common(p)

    p = sub.add_parser("rewire", help="triangle-raising degree-preserving rewiring")
    p.add_argument("--edges", required=True)
    p.add_argument("--target-rho2", type=float, required=True)
    p.add_argument("--out-edges")
    common(p, seed_default=0)

    p = sub.add_parser("strength", help="per-order interaction strength of a checkpoint")
    p.add_argument("--model", required=True)
    common(p)

    return parser


_COMMANDS = {
    "lift": _cmd_lift,
    "spectra": _cmd_spectra,
    "train": _cmd_train,
    "impute": _cmd_impute,
    "graphclass": _cmd_graphclass,
    "shwl": _cmd_shwl,
    "rewire": _cmd_rewire,
    "strength": _cmd_strength,
}


def run(argv) -> int:
    level = os.environ.get("FP_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        payload = _COMMANDS[args.command](args)
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (SaturationError, ConvergenceError) as exc:
        extra = {}
        if isinstance(exc, SaturationError) and exc.achieved_rho2 is not None:
            extra = {"achieved_rho2": exc.achieved_rho2}
        print(f"error: {exc} {json.dumps(extra) if extra else ''}".rstrip(), file=sys.stderr)
        return NUMERIC_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    _write_json(payload, args.out)
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))
