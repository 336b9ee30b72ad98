"""Config-driven experiment grid: generate, order, prune, evaluate, persist, summarize.

Every (cell, seed) pair is one job. The dataset seed is a stable hash of the
base seed and the cell descriptor, so results do not depend on scheduling and
adding cells never changes existing ones.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .discovery import (
    DiscoveryConfig,
    das_candidates,
    nogam_order,
    random_baseline,
    resit_order,
    score_order,
    scoresort_order,
)
from .errors import ParameterError
from .graphs import DENSITIES, GRAPH_KINDS, GraphConfig, sample_graph
from .metrics import metric_dict
from .pruning import ALPHA_GRID, PruneConfig, prune_pvalues, threshold_pvalues
from .scm import SCENARIO_PARAMS, SCENARIOS, NoiseSpec, ScenarioSpec, generate, standardize
from .seeding import child_rng, stable_hash64

METHODS = ("scoresort", "score", "nogam", "resit", "das", "random")
ALPHA_SELECTION = ("fixed", "oracle-best")

CSV_HEADER = ("scenario", "scenario_params", "graph", "nodes", "density", "n", "seed", "method",
              "alpha", "tp", "fp", "fn", "tn", "f1", "fnr", "fpr", "fnr_order", "bsf",
              "runtime_ms", "error")
METRIC_FIELDS = ("tp", "fp", "fn", "tn", "f1", "fnr", "fpr", "fnr_order", "bsf", "runtime_ms")
DEFAULT_GROUP_KEYS = ("scenario", "scenario_params", "graph", "nodes", "density", "n", "method")


@dataclass(frozen=True)
class Cell:
    scenario: ScenarioSpec
    graph: str
    nodes: int
    density: str
    n: int

    def descriptor(self) -> tuple:
        return (self.scenario.kind, self.scenario.describe(), self.scenario.noise.kind,
                self.graph, self.nodes, self.density, self.n)

    def graph_descriptor(self) -> tuple:
        return (self.graph, self.nodes, self.density)


@dataclass(frozen=True)
class BenchConfig:
    graphs: tuple[str, ...] = ("ER",)
    nodes: tuple[int, ...] = (10,)
    densities: tuple[str, ...] = ("sparse",)
    scenarios: tuple[ScenarioSpec, ...] = (ScenarioSpec("vanilla"),)
    samples: tuple[int, ...] = (1000,)
    methods: tuple[str, ...] = ("score", "nogam")
    alphas: tuple[float, ...] = (0.05,)
    seeds: tuple[int, ...] = tuple(range(20))
    alpha_selection: str = "fixed"
    jobs: int = 1
    standardize_lingam: bool = True
    das_significance: float = 0.05
    record_runtime: bool = False
    discovery: DiscoveryConfig = field(default_factory=DiscoveryConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)

    def __post_init__(self) -> None:
        for name in ("graphs", "nodes", "densities", "scenarios", "samples", "methods", "alphas", "seeds"):
            if not getattr(self, name):
                raise ParameterError(f"config field {name!r} must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ParameterError("seeds must be distinct")
        for s in self.seeds:
            if not 0 <= s < 2**64:
                raise ParameterError(f"seed {s} is not a 64-bit unsigned integer")
        for g in self.graphs:
            if g not in GRAPH_KINDS:
                raise ParameterError(f"unknown graph kind {g!r}; expected one of {GRAPH_KINDS}")
        for dens in self.densities:
            if dens not in DENSITIES:
                raise ParameterError(f"unknown density {dens!r}; expected one of {DENSITIES}")
        for m in self.methods:
            if m not in METHODS:
                raise ParameterError(f"unknown method {m!r}; expected one of {METHODS}")
        for a in self.alphas:
            if not 0 < a < 1:
                raise ParameterError(f"alpha must lie in (0, 1), got {a}")
        if self.alpha_selection not in ALPHA_SELECTION:
            raise ParameterError(f"alpha_selection must be one of {ALPHA_SELECTION}")
        if self.jobs < 1:
            raise ParameterError(f"jobs must be >= 1, got {self.jobs}")
        if any(n < 10 for n in self.samples):
            raise ParameterError("sample sizes must be >= 10")

    def cells(self) -> list[Cell]:
        return [Cell(sc, g, d, dens, n) for sc, g, d, dens, n in
                itertools.product(self.scenarios, self.graphs, self.nodes, self.densities, self.samples)]


def _scenario_list(items: Sequence[Any]) -> tuple[ScenarioSpec, ...]:
    """Expand scenario entries; list-valued parameters form a cartesian product."""
    out = []
    for item in items:
        if isinstance(item, str):
            item = {"kind": item}
        if not isinstance(item, dict) or "kind" not in item:
            raise ParameterError(f"scenario entry must be a name or an object with 'kind': {item!r}")
        item = dict(item)
        kind = item.pop("kind")
        noise = NoiseSpec(**item.pop("noise", {}))
        unknown = set(item) - set(SCENARIO_PARAMS)
        if unknown:
            raise ParameterError(f"unknown scenario parameters {sorted(unknown)}")
        names = sorted(item)
        values = [v if isinstance(v, list) else [v] for v in (item[k] for k in names)]
        for combo in itertools.product(*values):
            out.append(ScenarioSpec(kind, noise=noise, **dict(zip(names, combo))))
    return tuple(out)


def config_from_dict(raw: dict[str, Any]) -> BenchConfig:
    """Build a config from a parsed JSON object (schema in the README)."""
    if not isinstance(raw, dict):
        raise ParameterError("config must be a JSON object")
    known = {f.name for f in fields(BenchConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    kw: dict[str, Any] = {}
    for key, value in raw.items():
        if key == "scenarios":
            kw[key] = _scenario_list(value)
        elif key == "seeds":
            if isinstance(value, dict):
                start, count = int(value.get("start", 0)), int(value["count"])
                kw[key] = tuple(range(start, start + count))
            else:
                kw[key] = tuple(int(s) for s in value)
        elif key == "discovery":
            kw[key] = DiscoveryConfig(**value)
        elif key == "prune":
            kw[key] = PruneConfig(**value)
        elif key in ("graphs", "densities", "methods"):
            kw[key] = tuple(str(v) for v in value)
        elif key in ("nodes", "samples"):
            kw[key] = tuple(int(v) for v in value)
        elif key == "alphas":
            kw[key] = tuple(float(v) for v in value)
        else:
            kw[key] = value
    try:
        return BenchConfig(**kw)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None


def load_config(path: str | Path) -> BenchConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from None
    return config_from_dict(raw)


@dataclass
class BenchRecord:
    scenario: str
    scenario_params: str
    graph: str
    nodes: int
    density: str
    n: int
    seed: int
    method: str
    alpha: float | None
    metrics: dict[str, float | int | None] = field(default_factory=dict)
    runtime_ms: float | None = None
    error: str = ""
    selected: bool = True

    def sort_key(self) -> tuple:
        return (self.scenario, self.scenario_params, self.graph, self.nodes, self.density, self.n,
                self.seed, self.method, -1.0 if self.alpha is None else self.alpha)

    def row(self) -> dict[str, Any]:
        r: dict[str, Any] = {k: getattr(self, k) for k in CSV_HEADER[:9]}
        r.update({k: self.metrics.get(k) for k in METRIC_FIELDS if k != "runtime_ms"})
        r["runtime_ms"] = self.runtime_ms
        r["error"] = self.error
        return r


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.6g" % v
    return str(v)


def _error_text(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}".replace("\n", " ")


def _run_method(method: str, x: np.ndarray, dataset_seed: int, config: BenchConfig):
    """Return (order, {alpha: Dag}) for one method on one dataset."""
    d = x.shape[1]
    if method == "random":
        order, dag = random_baseline(d, child_rng(dataset_seed, "random_baseline"))
        return order, {None: dag}
    disc = config.discovery
    if method == "scoresort":
        order = scoresort_order(x, disc)
    elif method == "score" or method == "das":
        order = score_order(x, disc)
    elif method == "nogam":
        order = nogam_order(x, config=disc)
    elif method == "resit":
        order = resit_order(x, disc)
    else:  # pragma: no cover - validated in BenchConfig
        raise ParameterError(f"unknown method {method!r}")
    cands = das_candidates(x, order, config.das_significance, disc) if method == "das" else None
    pvals = prune_pvalues(x, order, cands, config.prune)
    return order, {a: threshold_pvalues(pvals, a) for a in config.alphas}


def run_job(config: BenchConfig, cell: Cell, seed: int) -> list[BenchRecord]:
    base = dict(scenario=cell.scenario.kind, scenario_params=cell.scenario.describe(), graph=cell.graph,
                nodes=cell.nodes, density=cell.density, n=cell.n, seed=seed)
    alphas_for = {m: ([None] if m == "random" else list(config.alphas)) for m in config.methods}
    graph_seed = stable_hash64(seed, cell.graph_descriptor())
    data_seed = stable_hash64(seed, cell.descriptor())
    try:
        gcfg = GraphConfig(cell.graph, cell.nodes, cell.density, seed=graph_seed).resolved()
        gcfg.validate()
        truth = sample_graph(gcfg)
        ds = generate(truth, cell.scenario, cell.n, data_seed, gcfg)
        if cell.scenario.kind == "lingam" and config.standardize_lingam:
            ds = standardize(ds)
    except Exception as exc:  # noqa: BLE001 - failures become rows
        msg = "dataset: " + _error_text(exc)
        return [BenchRecord(**base, method=m, alpha=a, error=msg) for m in config.methods for a in alphas_for[m]]

    records = []
    for method in config.methods:
        t0 = time.perf_counter()
        try:
            order, dags = _run_method(method, ds.data, data_seed, config)
        except Exception as exc:  # noqa: BLE001
            msg = _error_text(exc)
            records.extend(BenchRecord(**base, method=method, alpha=a, error=msg) for a in alphas_for[method])
            continue
        elapsed = (time.perf_counter() - t0) * 1e3 if config.record_runtime else None
        group = [BenchRecord(**base, method=method, alpha=a, metrics=metric_dict(dag, truth, order),
                             runtime_ms=elapsed) for a, dag in dags.items()]
        if config.alpha_selection == "oracle-best" and len(group) > 1:
            best = max(range(len(group)), key=lambda k: (group[k].metrics["f1"], -k))
            for k, rec in enumerate(group):
                rec.selected = k == best
        records.extend(group)
    return records


def _job_entry(args: tuple[BenchConfig, Cell, int]) -> list[BenchRecord]:
    with threadpool_limits(limits=1):
        return run_job(*args)


def run(config: BenchConfig, jobs: int | None = None) -> list[BenchRecord]:
    """Run the whole grid and return records in canonical order.

    In oracle-best mode, only the selected alpha per (dataset, method) is kept.
    """
    jobs = config.jobs if jobs is None else jobs
    if jobs < 1:
        raise ParameterError(f"jobs must be >= 1, got {jobs}")
    tasks = [(config, cell, seed) for cell in config.cells() for seed in config.seeds]
    if jobs == 1 or len(tasks) == 1:
        chunks = [_job_entry(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            chunks = list(pool.map(_job_entry, tasks))
    records = [r for chunk in chunks for r in chunk]
    if config.alpha_selection == "oracle-best":
        records = [r for r in records if r.selected]
    return sorted(records, key=BenchRecord.sort_key)


def records_to_csv(records: Iterable[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        row = rec.row()
        w.writerow([_fmt(row[k]) for k in CSV_HEADER])
    return buf.getvalue()


def write_results(records: Iterable[BenchRecord], path: str | Path) -> None:
    Path(path).write_text(records_to_csv(records))


def read_results(path: str | Path) -> list[dict[str, Any]]:
    """Parse a results CSV into row dicts; numeric cells become floats, blanks None."""
    text = Path(path).read_text()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_HEADER:
        raise ParameterError(f"{path}: not a results file (header mismatch)")
    rows = []
    for line, raw in enumerate(reader, start=2):
        row: dict[str, Any] = dict(raw)
        for k in ("nodes", "n", "seed"):
            try:
                row[k] = int(raw[k])
            except (TypeError, ValueError):
                raise ParameterError(f"{path}: line {line}: bad integer in column {k!r}") from None
        for k in ("alpha",) + METRIC_FIELDS:
            cell = raw[k]
            try:
                row[k] = float(cell) if cell not in ("", None) else None
            except ValueError:
                raise ParameterError(f"{path}: line {line}: bad number in column {k!r}") from None
        rows.append(row)
    return rows


def _as_row(r: BenchRecord | dict[str, Any]) -> dict[str, Any]:
    return r.row() if isinstance(r, BenchRecord) else r


@dataclass(frozen=True)
class MetricSummary:
    count: int
    median: float
    q25: float
    q75: float
    mean: float
    std: float


def summarize(records: Sequence[BenchRecord | dict[str, Any]],
              group_by: Sequence[str] = DEFAULT_GROUP_KEYS) -> list[dict[str, Any]]:
    """Per-group statistics of every metric; failed rows are only counted.

    Quantiles use linear interpolation; ``std`` is the sample standard
    deviation (0 for a single value). Groups come out sorted by key.
    """
    if not records:
        raise ParameterError("no records to summarize")
    for k in group_by:
        if k not in CSV_HEADER[:9]:
            raise ParameterError(f"cannot group by {k!r}; choose from {CSV_HEADER[:9]}")
    groups: dict[tuple, list[dict[str, Any]]] = {}
    for r in map(_as_row, records):
        groups.setdefault(tuple(r[k] for k in group_by), []).append(r)

    def key_order(item):
        return tuple((v is None, v if v is not None else 0) for v in item[0])

    out = []
    for key, rows in sorted(groups.items(), key=key_order):
        ok = [r for r in rows if not r["error"]]
        stats: dict[str, MetricSummary] = {}
        for m in METRIC_FIELDS:
            vals = np.array([r[m] for r in ok if r[m] is not None], dtype=float)
            if vals.size == 0:
                continue
            q25, med, q75 = np.quantile(vals, [0.25, 0.5, 0.75], method="linear")
            std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            stats[m] = MetricSummary(int(vals.size), float(med), float(q25), float(q75), float(vals.mean()), std)
        out.append({"keys": dict(zip(group_by, key)), "records": len(rows),
                    "failures": len(rows) - len(ok), "metrics": stats})
    return out


SUMMARY_STATS = ("count", "median", "q25", "q75", "mean", "std")


def summary_to_csv(summary: Sequence[dict[str, Any]]) -> str:
    """Tidy long format: one row per group and metric."""
    if not summary:
        return ""
    keys = list(summary[0]["keys"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys + ["records", "failures", "metric"] + list(SUMMARY_STATS))
    for g in summary:
        for m, s in g["metrics"].items():
            w.writerow([_fmt(g["keys"][k]) for k in keys] + [g["records"], g["failures"], m]
                       + [_fmt(getattr(s, a)) for a in SUMMARY_STATS])
    return buf.getvalue()


def summary_to_json(summary: Sequence[dict[str, Any]]) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v

    doc = [{"keys": g["keys"], "records": g["records"], "failures": g["failures"],
            "metrics": {m: {a: clean(getattr(s, a)) for a in SUMMARY_STATS} for m, s in g["metrics"].items()}}
           for g in summary]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


__all__ = [
    "ALPHA_GRID", "BenchConfig", "BenchRecord", "CSV_HEADER", "Cell", "METHODS", "MetricSummary",
    "SCENARIOS", "config_from_dict", "load_config", "read_results", "records_to_csv", "run", "run_job",
    "summarize", "summary_to_csv", "summary_to_json", "write_results",
]
