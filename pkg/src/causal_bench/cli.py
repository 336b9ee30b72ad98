"""Command-line entry point: ``causal-bench {gen,discover,eval,bench,report}``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import bench
from .discovery import (
    DiscoveryConfig,
    das_candidates,
    nogam_order,
    resit_order,
    score_order,
    scoresort_order,
)
from .errors import ParameterError
from .graphs import DENSITIES, GraphConfig, format_order, parse_order, read_adjacency_csv, sample_graph, write_adjacency_csv
from .metrics import metric_dict
from .pruning import PruneConfig, cam_prune, prune_from_candidates
from .scm import SCENARIOS, ScenarioSpec, generate, read_data_csv, write_dataset

EXIT_USAGE = 1
EXIT_RUNTIME = 2
THREADS_ENV = "CAUSAL_BENCH_THREADS"
DISCOVER_METHODS = ("scoresort", "score", "nogam", "resit", "das")
GRAPH_CHOICES = ("er", "sf", "grp", "fc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="causal-bench", description="Synthetic causal discovery benchmark.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a dataset",
                       description="Write <out>.data.csv (header X1..Xd), <out>.truth.csv "
                                   "(0/1 adjacency, row = parent) and <out>.meta.json.")
    g.add_argument("--scenario", required=True, choices=SCENARIOS)
    g.add_argument("--graph", required=True, type=str.lower, choices=GRAPH_CHOICES)
    g.add_argument("--nodes", required=True, type=int)
    g.add_argument("--density", required=True, choices=DENSITIES)
    g.add_argument("--samples", required=True, type=int)
    g.add_argument("--seed", required=True, type=int)
    g.add_argument("--out", required=True, help="output path prefix")
    g.add_argument("--rho", type=float, help="confounded: probability a node pair shares a latent")
    g.add_argument("--gamma", type=float, help="measure_error: noise-to-signal variance ratio")
    g.add_argument("--delta", type=float, help="lingam: weight of the non-Gaussian noise component")
    g.add_argument("--ar-alpha", type=float, dest="ar_alpha", help="autoregressive: lag-1 coefficient")

    d = sub.add_parser("discover", help="infer an order and a pruned graph",
                       description="Write <out>.order.txt (space-separated node indices, source first) "
                                   "and <out>.pred.csv (0/1 adjacency).")
    d.add_argument("--method", required=True, choices=DISCOVER_METHODS)
    d.add_argument("--alpha", type=float, default=0.05, help="pruning significance level (default 0.05)")
    d.add_argument("--in", dest="inp", required=True, help="data CSV with header X1..Xd")
    d.add_argument("--out", required=True, help="output path prefix")
    d.add_argument("--das-significance", type=float, default=0.05)

    e = sub.add_parser("eval", help="score a predicted graph",
                       description="Print the metrics JSON {tp, fp, fn, tn, f1, fnr, fpr, [fnr_order], bsf}.")
    e.add_argument("--pred", required=True, help="predicted 0/1 adjacency CSV")
    e.add_argument("--truth", required=True, help="true 0/1 adjacency CSV")
    e.add_argument("--order", help="order file; adds fnr_order")
    e.add_argument("--out", help="also write the JSON here")

    b = sub.add_parser("bench", help="run an experiment grid",
                       description="Run the JSON-configured grid and write the results CSV.")
    b.add_argument("--config", required=True, help="JSON config file (schema in README)")
    b.add_argument("--out", required=True, help="results CSV path")
    b.add_argument("--jobs", type=int, help=f"parallel worker cap (overrides ${THREADS_ENV} and the config)")
    b.add_argument("--timing", action="store_true", help="fill runtime_ms (makes output non-reproducible)")

    r = sub.add_parser("report", help="summarize a results CSV",
                       description="Group results and write median/quartiles/mean/std per metric. "
                                   "A .json output path selects JSON, anything else tidy CSV.")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--group-by", default=",".join(bench.DEFAULT_GROUP_KEYS),
                   help="comma-separated result columns")
    r.add_argument("--out", required=True)
    return p


def _jobs(flag: int | None, config_jobs: int) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return config_jobs


def _cmd_gen(a: argparse.Namespace) -> None:
    try:
        spec = ScenarioSpec(a.scenario, rho=a.rho, gamma=a.gamma, delta=a.delta, ar_alpha=a.ar_alpha)
        gcfg = GraphConfig(a.graph.upper(), a.nodes, a.density, seed=a.seed).resolved()
        gcfg.validate()
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    if a.samples < 1:
        raise UsageError("--samples must be >= 1")
    truth = sample_graph(gcfg)
    write_dataset(generate(truth, spec, a.samples, a.seed, gcfg), a.out)


def _cmd_discover(a: argparse.Namespace) -> None:
    try:
        cfg = PruneConfig(alpha=a.alpha)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    if not 0 < a.das_significance < 1:
        raise UsageError("--das-significance must lie in (0, 1)")
    x = read_data_csv(a.inp)
    disc = DiscoveryConfig()
    finder = {"scoresort": scoresort_order, "score": score_order, "das": score_order,
              "resit": resit_order, "nogam": lambda v, c: nogam_order(v, config=c)}[a.method]
    order = finder(x, disc)
    if a.method == "das":
        pred = prune_from_candidates(x, order, das_candidates(x, order, a.das_significance, disc), cfg)
    else:
        pred = cam_prune(x, order, cfg)
    Path(a.out + ".order.txt").write_text(format_order(order))
    write_adjacency_csv(pred, a.out + ".pred.csv")


def _cmd_eval(a: argparse.Namespace) -> None:
    pred = read_adjacency_csv(a.pred)
    truth = read_adjacency_csv(a.truth)
    order = parse_order(Path(a.order).read_text()) if a.order else None
    text = json.dumps(metric_dict(pred, truth, order), sort_keys=False)
    print(text)
    if a.out:
        Path(a.out).write_text(text + "\n")


def _cmd_bench(a: argparse.Namespace) -> None:
    try:
        config = bench.load_config(a.config)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    jobs = _jobs(a.jobs, config.jobs)
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if a.timing:
        config = replace(config, record_runtime=True)
    bench.write_results(bench.run(config, jobs), a.out)


def _cmd_report(a: argparse.Namespace) -> None:
    try:
        rows = bench.read_results(a.inp)
    except OSError as exc:
        raise UsageError(f"cannot read {a.inp}: {exc}") from None
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    if not rows:
        raise UsageError(f"{a.inp}: no result rows")
    keys = [k.strip() for k in a.group_by.split(",") if k.strip()]
    try:
        summary = bench.summarize(rows, keys)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    out = Path(a.out)
    out.write_text(bench.summary_to_json(summary) if out.suffix == ".json" else bench.summary_to_csv(summary))


COMMANDS = {"gen": _cmd_gen, "discover": _cmd_discover, "eval": _cmd_eval,
            "bench": _cmd_bench, "report": _cmd_report}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
