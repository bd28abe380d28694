"""Command-line front end: bounding, baselines, sweeps, generators, exports.

Exit codes for `bound`: 0 optimal, 2 infeasible (theta = inf), 3 resource cap
(term budget or pivot limit). Reports are UTF-8 JSON; sweeps are CSV with
9-significant-digit floats and the literal "inf" for infeasible cells.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import certificate, lp as lpsolver, network, oracle, sdp, sparsity
from .polynomial import (VariableIndexing, local_norm_gradient_polynomial,
                         norm_gradient_polynomial)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_RESOURCE = 3


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_net(args) -> network.Network:
    with open(args.net, "rb") as fh:
        return network.load_network(fh, output_row=args.output_index)


def _load_bounds(net: network.Network, args) -> network.NeuronBounds | None:
    if args.local is None:
        return None
    with open(args.local, "r", encoding="utf-8") as fh:
        x0 = np.asarray(json.load(fh), dtype=float)
    return network.local_derivative_bounds(net, x0, args.eps)


def _fmt9(v: float) -> str:
    if math.isinf(v) or math.isnan(v):
        return "inf"
    return format(v, ".9g")


def cmd_bound(args) -> int:
    net = _load_net(args)
    bounds = _load_bounds(net, args)
    if args.export_mps or args.no_solve:
        p = (local_norm_gradient_polynomial(net, bounds)
             if bounds is not None else norm_gradient_polynomial(net))
        indexing = VariableIndexing.from_network(net)
        if args.mode == "dense":
            pattern = sparsity.single_clique_pattern(indexing.nvars)
        else:
            pattern = sparsity.induced_pattern(
                sparsity.computational_graph(net), indexing)
        try:
            terms = certificate.enumerate_terms(pattern, args.k, args.max_terms)
        except certificate.TermBudgetError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RESOURCE
        if args.k == 2:
            terms, _ = certificate.prune_degree2_terms(p, terms)
        assembled = certificate.assemble_lp(p, terms)
        if args.export_mps:
            lpsolver.export_mps(assembled, args.export_mps)
        if args.no_solve:
            return EXIT_OK
    try:
        report = certificate.hierarchy_bound(
            net, args.k, mode=args.mode, bounds=bounds,
            max_terms=args.max_terms, max_pivots=args.max_pivots)
    except certificate.TermBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    _write_text(args.out, json.dumps(report.to_dict()))
    if report.status == lpsolver.STATUS_OPTIMAL:
        return EXIT_OK
    if report.status == lpsolver.STATUS_INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_RESOURCE


def cmd_baseline(args) -> int:
    net = _load_net(args)
    start = time.perf_counter()
    report: dict = {"method": args.method}
    if args.method == "ubp":
        report["value"] = network.ubp(net)
    elif args.method == "lbs":
        report["value"] = network.lbs(net, samples=args.samples,
                                      radius=args.radius, seed=args.seed)
        report["samples"] = args.samples
        report["radius"] = args.radius
        report["seed"] = args.seed
    else:  # oracle
        p = norm_gradient_polynomial(net)
        try:
            result = oracle.vertex_max(p, max_vars=args.oracle_cap)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RESOURCE
        report["value"] = result.value
        report["vertices"] = result.vertices
    report["seconds"] = time.perf_counter() - start
    _write_text(args.out, json.dumps(report))
    return EXIT_OK


def _sweep_cell(widths, r, seed, ks, args):
    """One sweep row; failures are reported in the row, not raised."""
    row: dict[str, str] = {
        "widths": "x".join(str(w) for w in widths),
        "sparsity": str(r),
        "seed": str(seed),
        "status": "ok",
    }
    try:
        net = network.random_network(widths, r, seed)

        t0 = time.perf_counter()
        lower = network.lbs(net, samples=args.samples, radius=args.radius, seed=seed)
        row["lbs"] = _fmt9(lower)
        row["lbs_seconds"] = _fmt9(time.perf_counter() - t0)

        t0 = time.perf_counter()
        upper = network.ubp(net)
        row["ubp"] = _fmt9(upper)
        row["ubp_seconds"] = _fmt9(time.perf_counter() - t0)

        if args.oracle:
            t0 = time.perf_counter()
            result = oracle.vertex_max(norm_gradient_polynomial(net),
                                       max_vars=args.oracle_cap)
            row["oracle"] = _fmt9(result.value)
            row["oracle_seconds"] = _fmt9(time.perf_counter() - t0)

        for k in ks:
            report = certificate.hierarchy_bound(
                net, k, mode=args.mode, max_terms=args.max_terms,
                max_pivots=args.max_pivots)
            theta = report.theta
            row[f"theta_k{k}"] = _fmt9(theta)
            row[f"theta_k{k}_seconds"] = _fmt9(report.seconds)
            row[f"theta_k{k}_relerr"] = (
                _fmt9((theta - lower) / lower) if math.isfinite(theta) and lower > 0
                else "inf")
            row[f"lbs_le_theta_k{k}"] = str(int(lower <= theta + 1e-9))
            row[f"theta_k{k}_le_ubp"] = str(int(theta <= upper + 1e-9))
    except Exception as exc:  # record and continue with the next cell
        row["status"] = f"error: {exc}"
    return row


def cmd_sweep(args) -> int:
    widths = [int(w) for w in args.widths.split(",")]
    sparsities = [int(r) for r in args.sparsity.split(",")]
    ks = [int(k) for k in args.k.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]

    columns = ["widths", "sparsity", "seed", "status",
               "lbs", "lbs_seconds", "ubp", "ubp_seconds"]
    if args.oracle:
        columns += ["oracle", "oracle_seconds"]
    for k in ks:
        columns += [f"theta_k{k}", f"theta_k{k}_seconds", f"theta_k{k}_relerr",
                    f"lbs_le_theta_k{k}", f"theta_k{k}_le_ubp"]

    lines = [",".join(columns)]
    for r in sparsities:
        for seed in seeds:
            row = _sweep_cell(widths, r, seed, ks, args)
            lines.append(",".join(row.get(c, "") for c in columns))
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_gen_random(args) -> int:
    widths = [int(w) for w in args.widths.split(",")]
    net = network.random_network(widths, args.sparsity, args.seed)
    with open(args.out, "wb") as fh:
        fh.write(network.save_network(net))
    return EXIT_OK


def cmd_prune(args) -> int:
    net = _load_net(args)
    pruned = network.prune_network(net, args.fraction)
    with open(args.out, "wb") as fh:
        fh.write(network.save_network(pruned))
    return EXIT_OK


def cmd_export(args) -> int:
    net = _load_net(args)
    if args.format == "mps":
        bounds = _load_bounds(net, args)
        p = (local_norm_gradient_polynomial(net, bounds)
             if bounds is not None else norm_gradient_polynomial(net))
        indexing = VariableIndexing.from_network(net)
        if args.mode == "dense":
            pattern = sparsity.single_clique_pattern(indexing.nvars)
        else:
            pattern = sparsity.induced_pattern(
                sparsity.computational_graph(net), indexing)
        try:
            terms = certificate.enumerate_terms(pattern, args.k, args.max_terms)
        except certificate.TermBudgetError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RESOURCE
        if args.k == 2:
            terms, _ = certificate.prune_degree2_terms(p, terms)
        assembled = certificate.assemble_lp(p, terms)
        lpsolver.export_mps(assembled, args.out)
    else:
        relaxation = sdp.shor_relax(sdp.qcqp_reformulate(net))
        sdp.export_sdpa(relaxation, args.out)
    return EXIT_OK


def cmd_validate_pattern(args) -> int:
    net = _load_net(args)
    indexing = VariableIndexing.from_network(net)
    pattern = sparsity.induced_pattern(sparsity.computational_graph(net), indexing)
    report = sparsity.validate_pattern(pattern, norm_gradient_polynomial(net))
    _write_text(args.out, sparsity.pattern_to_json(pattern, report.rip))
    return EXIT_OK


def _add_net_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--net", required=True, help="network JSON file")
    p.add_argument("--output-index", type=int, default=None,
                   help="output row to keep for multi-output network files")


def _add_bound_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, required=True, help="hierarchy degree")
    p.add_argument("--mode", choices=("sparse", "dense"), default="sparse")
    p.add_argument("--local", default=None, metavar="X0_JSON",
                   help="JSON array with the ball center; enables local bounds")
    p.add_argument("--eps", type=float, default=0.0, help="l-inf ball radius")
    p.add_argument("--max-terms", type=int, default=None,
                   help="certificate term cap (default from LIPOPT_MAX_TERMS or 5e6)")
    p.add_argument("--max-pivots", type=int, default=1_000_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipcert",
        description="Certified l-inf Lipschitz bounds for feed-forward networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="solve the certificate LP for one network")
    _add_net_args(p)
    _add_bound_args(p)
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.add_argument("--export-mps", default=None, metavar="PATH",
                   help="also write the assembled LP in MPS format")
    p.add_argument("--no-solve", action="store_true",
                   help="export only, skip the embedded solver")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("baseline", help="ubp / lbs / vertex-oracle estimates")
    _add_net_args(p)
    p.add_argument("--method", choices=("ubp", "lbs", "oracle"), required=True)
    p.add_argument("--samples", type=int, default=50000)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle-cap", type=int, default=oracle.DEFAULT_VARIABLE_CAP)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", help="random-network grid, CSV output")
    p.add_argument("--widths", required=True, help="comma-separated, e.g. 40,40,1")
    p.add_argument("--sparsity", required=True, help="comma-separated fan-ins")
    p.add_argument("--k", required=True, help="comma-separated degrees")
    p.add_argument("--seeds", default=",".join(str(s) for s in range(10)))
    p.add_argument("--mode", choices=("sparse", "dense"), default="sparse")
    p.add_argument("--samples", type=int, default=50000)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--oracle", action="store_true", help="include the vertex oracle")
    p.add_argument("--oracle-cap", type=int, default=oracle.DEFAULT_VARIABLE_CAP)
    p.add_argument("--max-terms", type=int, default=None)
    p.add_argument("--max-pivots", type=int, default=1_000_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-random", help="generate a random network JSON")
    p.add_argument("--widths", required=True)
    p.add_argument("--sparsity", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_random)

    p = sub.add_parser("prune", help="remove the smallest-magnitude weights")
    _add_net_args(p)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("export", help="write MPS (certificate LP) or SDPA files")
    _add_net_args(p)
    p.add_argument("--format", choices=("mps", "sdpa"), required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--mode", choices=("sparse", "dense"), default="sparse")
    p.add_argument("--local", default=None)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--max-terms", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("validate-pattern", help="induced cliques + RIP status as JSON")
    _add_net_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate_pattern)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
