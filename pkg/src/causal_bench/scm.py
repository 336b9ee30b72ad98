"""Synthetic structural causal models: the vanilla additive noise model and
six scenarios that each break one of its assumptions.

All randomness is drawn from child streams keyed by ``(seed, purpose, node)``
(see :mod:`causal_bench.seeding`). Two scenarios sharing a seed therefore
share every draw they have in common; for instance, the clean variables of a
measurement-error dataset are bit-identical to the vanilla dataset.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import linalg, signal

from .errors import NumericError, ParameterError
from .graphs import Dag, GraphConfig, read_adjacency_csv, topological_sort, write_adjacency_csv
from .kernels import rbf_gram
from .seeding import child_rng

SCENARIOS = ("vanilla", "pnl", "lingam", "confounded", "measure_error", "unfaithful", "autoregressive")

# parameter name -> (scenarios using it, default)
SCENARIO_PARAMS = {
    "rho": ({"confounded"}, 0.2),
    "gamma": ({"measure_error"}, 0.8),
    "delta": ({"lingam"}, 1.0),
    "ar_alpha": ({"autoregressive"}, 0.5),
}

GP_JITTER = 1e-6
GP_MAX_JITTER = 1e-1
LINEAR_COEF_RANGE = (0.05, 1.0)


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "gaussian"  # or "mlp"
    variance_low: float = 0.5
    variance_high: float = 1.0
    mlp_weight_bound: float = 1.5
    mlp_hidden: int = 100

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "mlp"):
            raise ParameterError(f"noise kind must be 'gaussian' or 'mlp', got {self.kind!r}")
        if not 0 < self.variance_low <= self.variance_high:
            raise ParameterError("noise variance bounds must satisfy 0 < low <= high")
        if self.mlp_hidden < 1:
            raise ParameterError("mlp_hidden must be >= 1")
        if self.mlp_weight_bound < 0:
            raise ParameterError("mlp_weight_bound must be non-negative")


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "vanilla"
    rho: float | None = None
    gamma: float | None = None
    delta: float | None = None
    ar_alpha: float | None = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self) -> None:
        if self.kind not in SCENARIOS:
            raise ParameterError(f"unknown scenario {self.kind!r}; expected one of {SCENARIOS}")
        for name, (users, default) in SCENARIO_PARAMS.items():
            value = getattr(self, name)
            if self.kind in users:
                if value is None:
                    object.__setattr__(self, name, default)
            elif value is not None:
                raise ParameterError(f"parameter {name!r} does not apply to scenario {self.kind!r}")
        for name in ("rho", "gamma", "delta"):
            v = getattr(self, name)
            if v is not None and not 0 <= v <= 1:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        if self.gamma is not None and self.gamma == 0:
            raise ParameterError("gamma must be positive")
        if self.delta is not None and self.delta == 0:
            raise ParameterError("delta must be positive")
        if self.kind == "lingam" and self.noise.kind != "mlp":
            # LiNGAM needs non-Gaussian noise
            object.__setattr__(self, "noise", replace(self.noise, kind="mlp"))

    def params(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in SCENARIO_PARAMS if getattr(self, k) is not None}

    def describe(self) -> str:
        return ";".join(f"{k}={v:g}" for k, v in self.params().items())


@dataclass(frozen=True)
class Dataset:
    data: np.ndarray
    truth: Dag
    scenario: ScenarioSpec
    seed: int
    graph_config: GraphConfig | None = None
    standardized: bool = False

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=float, copy=True)
        if data.ndim != 2 or data.shape[1] != self.truth.d:
            raise ParameterError(f"data shape {data.shape} does not match d={self.truth.d}")
        if not np.all(np.isfinite(data)):
            raise NumericError("dataset contains NaN or Inf")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


# -- mechanisms --------------------------------------------------------------

def gp_mechanism(parent_values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw of a zero-mean GP with unit-bandwidth RBF kernel at the parent rows.

    Identical rows share one function value, so the draw is taken over the
    distinct rows only.
    """
    pv = np.asarray(parent_values, dtype=float)
    if pv.ndim == 1:
        pv = pv[:, None]
    if pv.shape[0] < 1 or pv.shape[1] < 1:
        raise ParameterError("gp_mechanism needs n >= 1 rows and k >= 1 parent columns")
    uniq, inverse = np.unique(pv, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    k = rbf_gram(uniq, uniq, 1.0)
    z = rng.standard_normal(uniq.shape[0])
    jitter = GP_JITTER
    while True:
        try:
            chol = linalg.cholesky(k + jitter * np.eye(len(k)), lower=True, check_finite=False)
            break
        except linalg.LinAlgError:
            jitter *= 10
            if jitter > GP_MAX_JITTER:
                raise NumericError("GP kernel factorization failed after jitter escalation") from None
    return (chol @ z)[inverse]


def _sigmoid(t: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def transform_noise_mlp(u: np.ndarray, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Random one-hidden-layer sigmoid MLP applied samplewise, then recentred."""
    a = spec.mlp_weight_bound
    h = spec.mlp_hidden
    w1 = rng.uniform(-a, a, size=h)
    b1 = rng.uniform(-a, a, size=h)
    w2 = rng.uniform(-a, a, size=h)
    out = _sigmoid(np.asarray(u, dtype=float)[:, None] * w1 + b1) @ w2
    return out - out.mean()


def _noise(i: int, n: int, spec: NoiseSpec, seed: int) -> np.ndarray:
    var = child_rng(seed, "noise_var", i).uniform(spec.variance_low, spec.variance_high)
    u = np.sqrt(var) * child_rng(seed, "noise", i).standard_normal(n)
    if spec.kind == "mlp":
        u = transform_noise_mlp(u, spec, child_rng(seed, "noise_mlp", i))
    return u


def noise_variance(i: int, spec: NoiseSpec, seed: int) -> float:
    """The variance drawn for node ``i``'s (pre-transform) Gaussian noise."""
    return float(child_rng(seed, "noise_var", i).uniform(spec.variance_low, spec.variance_high))


def _linear_coefs(k: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = LINEAR_COEF_RANGE
    return rng.uniform(lo, hi, size=k) * rng.choice([-1.0, 1.0], size=k)


def _mechanism(x: np.ndarray, parents: list[int], i: int, seed: int) -> np.ndarray:
    if not parents:
        return np.zeros(x.shape[0])
    return gp_mechanism(x[:, parents], child_rng(seed, "mech", i))


# -- scenario generators -----------------------------------------------------

def _gen_anm(truth: Dag, n: int, seed: int, noise: NoiseSpec, extra=None) -> np.ndarray:
    x = np.zeros((n, truth.d))
    for i in topological_sort(truth):
        x[:, i] = _mechanism(x, truth.parents(i), i, seed) + _noise(i, n, noise, seed)
        if extra is not None:
            x[:, i] += extra(i)
    return x


def _gen_pnl(truth: Dag, n: int, seed: int, noise: NoiseSpec) -> np.ndarray:
    x = np.zeros((n, truth.d))
    for i in topological_sort(truth):
        z = _mechanism(x, truth.parents(i), i, seed) + _noise(i, n, noise, seed)
        sd = z.std()
        if sd == 0:
            raise NumericError(f"node {i}: post-nonlinear input has zero variance")
        # cube of a unit-scale input keeps magnitudes bounded
        x[:, i] = (z / sd) ** 3
    return x


def _gen_lingam(truth: Dag, n: int, seed: int, noise: NoiseSpec, delta: float) -> np.ndarray:
    x = np.zeros((n, truth.d))
    for i in topological_sort(truth):
        pa = truth.parents(i)
        linear = child_rng(seed, "linear_pick", i).random() < delta
        if linear and pa:
            f = x[:, pa] @ _linear_coefs(len(pa), child_rng(seed, "linear_coef", i))
        else:
            f = _mechanism(x, pa, i, seed)
        x[:, i] = f + _noise(i, n, noise, seed)
    return x


def confounder_assignment(d: int, rho: float, seed: int) -> dict[tuple[int, int], int]:
    """Confounded pairs ``(i, j), i < j`` mapped to their latent index."""
    rng = child_rng(seed, "confounder_pairs")
    out = {}
    for i in range(d):
        for j in range(i + 1, d):
            hit = rng.random() < rho
            k = int(rng.integers(d))
            if hit:
                out[(i, j)] = k
    return out


def _gen_confounded(truth: Dag, n: int, seed: int, noise: NoiseSpec, rho: float) -> np.ndarray:
    pairs = confounder_assignment(truth.d, rho, seed)
    latents_of = defaultdict(set)
    for (i, j), k in pairs.items():
        latents_of[i].add(k)
        latents_of[j].add(k)
    z_cache: dict[int, np.ndarray] = {}

    def latent(k: int) -> np.ndarray:
        if k not in z_cache:
            z_cache[k] = child_rng(seed, "latent", k).standard_normal(n)
        return z_cache[k]

    def extra(i: int) -> np.ndarray:
        total = np.zeros(n)
        for k in sorted(latents_of.get(i, ())):
            total += gp_mechanism(latent(k), child_rng(seed, "confounder_mech", i, k))
        return total

    return _gen_anm(truth, n, seed, noise, extra)


def _gen_measure_error(truth: Dag, n: int, seed: int, noise: NoiseSpec, gamma: float) -> np.ndarray:
    x = _gen_anm(truth, n, seed, noise)
    for i in range(truth.d):
        sd = np.sqrt(gamma * x[:, i].var())
        x[:, i] = x[:, i] + sd * child_rng(seed, "measure", i).standard_normal(n)
    return x


def unfaithful_plan(truth: Dag) -> tuple[dict[int, tuple[int, int]], dict[int, set[int]]]:
    """Pick the triplets ``i -> j -> k, i -> k`` whose ``i -> k`` effect is cancelled.

    Returns ``rewired[k] = (i, j)`` and ``splits[j]``, the parents of ``j``
    whose contribution is drawn as a separate univariate component. Triplets
    are taken in ascending ``(i, j, k)`` order; a node is rewired at most once
    and triplets that would conflict with an earlier choice are skipped.
    """
    adj = truth.adj
    d = truth.d
    rewired: dict[int, tuple[int, int]] = {}
    splits: dict[int, set[int]] = defaultdict(set)
    for i in range(d):
        for j in range(d):
            if not adj[i, j]:
                continue
            for k in range(d):
                if not (adj[j, k] and adj[i, k]):
                    continue
                if k in rewired or i in splits[k] or j in splits[k]:
                    continue
                if j in rewired and i in rewired[j]:
                    continue
                rewired[k] = (i, j)
                splits[j].add(i)
    return rewired, dict(splits)


def _gen_unfaithful(truth: Dag, n: int, seed: int, noise: NoiseSpec) -> np.ndarray:
    rewired, splits = unfaithful_plan(truth)
    x = np.zeros((n, truth.d))
    comp: dict[tuple[int, int], np.ndarray] = {}
    for v in topological_sort(truth):
        special = set(splits.get(v, ())) | set(rewired.get(v, ()))
        rest = [p for p in truth.parents(v) if p not in special]
        value = _mechanism(x, rest, v, seed) + _noise(v, n, noise, seed)
        for a in sorted(splits.get(v, ())):
            comp[(a, v)] = gp_mechanism(x[:, a], child_rng(seed, "split_mech", a, v))
            value += comp[(a, v)]
        if v in rewired:
            i, j = rewired[v]
            value += comp[(i, j)] - x[:, j]
        x[:, v] = value
    return x


def _gen_autoregressive(truth: Dag, n: int, seed: int, noise: NoiseSpec, alpha: float) -> np.ndarray:
    x = np.zeros((n, truth.d))
    for i in topological_sort(truth):
        e = _mechanism(x, truth.parents(i), i, seed) + _noise(i, n, noise, seed)
        # X_i(t) = alpha X_i(t-1) + e(t), X_i(0) = e(0)
        x[:, i] = signal.lfilter([1.0], [1.0, -alpha], e)
    return x


def generate(truth: Dag, scenario: ScenarioSpec, n: int, seed: int,
             graph_config: GraphConfig | None = None) -> Dataset:
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    noise = scenario.noise
    kind = scenario.kind
    if kind == "vanilla":
        x = _gen_anm(truth, n, seed, noise)
    elif kind == "pnl":
        x = _gen_pnl(truth, n, seed, noise)
    elif kind == "lingam":
        x = _gen_lingam(truth, n, seed, noise, scenario.delta)
    elif kind == "confounded":
        x = _gen_confounded(truth, n, seed, noise, scenario.rho)
    elif kind == "measure_error":
        x = _gen_measure_error(truth, n, seed, noise, scenario.gamma)
    elif kind == "unfaithful":
        x = _gen_unfaithful(truth, n, seed, noise)
    elif kind == "autoregressive":
        x = _gen_autoregressive(truth, n, seed, noise, scenario.ar_alpha)
    else:  # pragma: no cover - ScenarioSpec validates kinds
        raise ParameterError(f"unknown scenario {kind!r}")
    return Dataset(x, truth, scenario, int(seed), graph_config)


def standardize(ds: Dataset, center: bool = False) -> Dataset:
    """Divide every column by its empirical standard deviation."""
    x = np.array(ds.data)
    sd = x.std(axis=0)
    if np.any(sd == 0):
        bad = [int(i) for i in np.flatnonzero(sd == 0)]
        raise NumericError(f"zero-variance columns cannot be standardized: {bad}")
    if center:
        x = x - x.mean(axis=0)
    return replace(ds, data=x / sd, standardized=True)


# -- file layout -------------------------------------------------------------

def _meta(ds: Dataset) -> dict:
    return {
        "scenario": ds.scenario.kind,
        "scenario_params": ds.scenario.params(),
        "noise": asdict(ds.scenario.noise),
        "graph_config": asdict(ds.graph_config) if ds.graph_config is not None else None,
        "seed": ds.seed,
        "n": ds.n,
        "d": ds.d,
        "standardized": ds.standardized,
    }


def write_dataset(ds: Dataset, prefix: str | Path) -> list[Path]:
    prefix = str(prefix)
    paths = [Path(prefix + ".data.csv"), Path(prefix + ".truth.csv"), Path(prefix + ".meta.json")]
    header = ",".join(f"X{i + 1}" for i in range(ds.d))
    np.savetxt(paths[0], ds.data, delimiter=",", fmt="%.17g", header=header, comments="")
    write_adjacency_csv(ds.truth, paths[1])
    paths[2].write_text(json.dumps(_meta(ds), indent=2, sort_keys=True) + "\n")
    return paths


def read_data_csv(path: str | Path) -> np.ndarray:
    """Parse a ``X1..Xd`` data file, reporting the offending row and column."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParameterError(f"{path}: empty file")
    header = lines[0].split(",")
    d = len(header)
    rows = []
    for r, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != d:
            raise ParameterError(f"{path}: line {r} has {len(cells)} columns, expected {d}")
        row = []
        for c, cell in enumerate(cells, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise ParameterError(f"{path}: line {r}, column {c}: not a number: {cell!r}") from None
            if not np.isfinite(v):
                raise ParameterError(f"{path}: line {r}, column {c}: non-finite value")
            row.append(v)
        rows.append(row)
    if not rows:
        raise ParameterError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def read_dataset(prefix: str | Path) -> Dataset:
    prefix = str(prefix)
    meta = json.loads(Path(prefix + ".meta.json").read_text())
    noise = NoiseSpec(**meta["noise"])
    scenario = ScenarioSpec(meta["scenario"], noise=noise, **meta["scenario_params"])
    gc = GraphConfig(**meta["graph_config"]) if meta.get("graph_config") else None
    return Dataset(read_data_csv(prefix + ".data.csv"), read_adjacency_csv(prefix + ".truth.csv"),
                   scenario, int(meta["seed"]), gc, bool(meta["standardized"]))
