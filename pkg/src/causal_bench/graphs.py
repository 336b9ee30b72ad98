"""Ground-truth DAGs: the ``Dag`` type, causal orders and random graph families.

Four families are supported: Erdos-Renyi (ER), scale-free preferential
attachment (SF), Gaussian random partitions (GRP) and fully connected (FC).
Every sampler orients edges along a random node permutation, so outputs are
acyclic by construction and node labels carry no information about the order.
"""
from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError, StructuralError
from .seeding import child_rng

GRAPH_KINDS = ("ER", "SF", "GRP", "FC")
DENSITIES = ("sparse", "dense")

# Edge density schema per node count: ("p", value) is a pairwise edge
# probability, ("m", value) a mean number of edges per node.
DENSITY_TABLE = {
    "sparse": {5: ("p", 0.1), 10: ("m", 1), 20: ("m", 1), 50: ("m", 2)},
    "dense": {5: ("p", 0.4), 10: ("m", 2), 20: ("m", 4), 50: ("m", 8)},
}

GRP_P_IN = 0.4
GRP_P_OUT = 0.05
GRP_P_OUT_ALT = 0.1


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over ``d`` nodes; ``adj[i, j]`` means ``i -> j``."""

    adj: np.ndarray

    def __post_init__(self) -> None:
        adj = np.array(self.adj, dtype=bool, copy=True)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise StructuralError(f"adjacency must be a non-empty square matrix, got shape {adj.shape}")
        if np.any(np.diag(adj)):
            raise StructuralError("self-loops are not allowed")
        adj.flags.writeable = False
        object.__setattr__(self, "adj", adj)
        _kahn(adj)  # raises on cycles

    @property
    def d(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adj.sum())

    def parents(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.adj[:, i])]

    def children(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.adj[i, :])]

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adj))]

    @classmethod
    def empty(cls, d: int) -> "Dag":
        return cls(np.zeros((d, d), dtype=bool))

    @classmethod
    def from_edges(cls, d: int, edges: Iterable[tuple[int, int]]) -> "Dag":
        adj = np.zeros((d, d), dtype=bool)
        for i, j in edges:
            adj[i, j] = True
        return cls(adj)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dag) and np.array_equal(self.adj, other.adj)

    def __hash__(self) -> int:
        return hash((self.d, self.adj.tobytes()))

    def __repr__(self) -> str:
        return f"Dag(d={self.d}, edges={self.edges()})"


@dataclass(frozen=True)
class CausalOrder:
    """Topological order, source first and leaf last."""

    perm: tuple[int, ...]

    def __post_init__(self) -> None:
        perm = tuple(int(p) for p in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise StructuralError(f"order is not a permutation of 0..{len(perm) - 1}: {perm}")
        object.__setattr__(self, "perm", perm)

    def __len__(self) -> int:
        return len(self.perm)

    def __iter__(self):
        return iter(self.perm)

    def positions(self) -> np.ndarray:
        pos = np.empty(len(self.perm), dtype=int)
        pos[list(self.perm)] = np.arange(len(self.perm))
        return pos

    def predecessors(self, node: int) -> list[int]:
        k = self.perm.index(node)
        return list(self.perm[:k])

    def full_dag(self) -> Dag:
        """Fully connected DAG admitted by the order."""
        d = len(self.perm)
        adj = np.zeros((d, d), dtype=bool)
        for k, i in enumerate(self.perm):
            adj[i, list(self.perm[k + 1:])] = True
        return Dag(adj)

    def is_consistent_with(self, g: Dag) -> bool:
        pos = self.positions()
        return all(pos[i] < pos[j] for i, j in g.edges())


def _kahn(adj: np.ndarray) -> list[int]:
    d = adj.shape[0]
    indeg = adj.sum(axis=0).astype(int)
    frontier = [i for i in range(d) if indeg[i] == 0]
    heapq.heapify(frontier)
    out = []
    while frontier:
        i = heapq.heappop(frontier)
        out.append(i)
        for j in np.flatnonzero(adj[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(frontier, int(j))
    if len(out) != d:
        raise StructuralError("graph contains a cycle")
    return out


def topological_sort(g: Dag | np.ndarray) -> CausalOrder:
    """Kahn's algorithm, always expanding the smallest available node index."""
    adj = g.adj if isinstance(g, Dag) else np.asarray(g, dtype=bool)
    return CausalOrder(tuple(_kahn(adj)))


@dataclass(frozen=True)
class GraphConfig:
    kind: str = "ER"
    d: int = 10
    density: str | None = "sparse"
    er_p: float | None = None
    er_m: float | None = None
    grp_p_in: float = GRP_P_IN
    grp_p_out: float = GRP_P_OUT
    seed: int = 0

    def resolved(self) -> "GraphConfig":
        """Fill ``er_p``/``er_m`` from the density table when neither is set."""
        if self.kind not in GRAPH_KINDS:
            raise ParameterError(f"unknown graph kind {self.kind!r}; expected one of {GRAPH_KINDS}")
        if self.kind in ("ER", "SF") and self.er_p is None and self.er_m is None:
            if self.density not in DENSITIES:
                raise ParameterError(f"density must be one of {DENSITIES}, got {self.density!r}")
            key, value = density_parameter(self.d, self.density)
            if self.kind == "SF" and key == "p":
                # SF needs an attachment count; 5-node rows only define p.
                key, value = "m", 1 if self.density == "sparse" else 2
            return replace(self, **{f"er_{key}": value})
        return self

    def validate(self) -> None:
        if self.d < 2:
            raise ParameterError(f"d must be >= 2, got {self.d}")
        for name in ("er_p", "grp_p_in", "grp_p_out"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v <= 1.0):
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        if self.er_m is not None and self.er_m < 1:
            raise ParameterError(f"er_m must be >= 1, got {self.er_m}")


def density_parameter(d: int, density: str) -> tuple[str, float]:
    """Density schema lookup; node counts outside the table use the nearest row."""
    table = DENSITY_TABLE[density]
    nearest = min(table, key=lambda k: (abs(k - d), k))
    return table[nearest]


def _edge_prob_from_m(m: float, d: int) -> float:
    # m edges per node on average -> m*d expected edges over d(d-1)/2 pairs
    return min(1.0, m * d / (d * (d - 1) / 2))


def _forward_pairs_mask(d: int, rng: np.random.Generator, prob: np.ndarray | float) -> np.ndarray:
    perm = rng.permutation(d)
    upper = np.triu(np.ones((d, d), dtype=bool), k=1)
    keep = upper & (rng.random((d, d)) < prob)
    adj = np.zeros((d, d), dtype=bool)
    adj[np.ix_(perm, perm)] = keep
    return adj


def sample_er(config: GraphConfig, rng: np.random.Generator) -> Dag:
    cfg = config.resolved()
    cfg.validate()
    if (cfg.er_p is None) == (cfg.er_m is None):
        raise ParameterError("exactly one of er_p / er_m must be set for ER graphs")
    p = cfg.er_p if cfg.er_p is not None else _edge_prob_from_m(cfg.er_m, cfg.d)
    while True:
        adj = _forward_pairs_mask(cfg.d, rng, p)
        # 5-node graphs are redrawn until they carry at least two edges
        if cfg.d != 5 or adj.sum() >= 2 or p == 0.0:
            return Dag(adj)


def sample_sf(config: GraphConfig, rng: np.random.Generator) -> Dag:
    """Barabasi-Albert attachment; edges point from earlier to later arrivals."""
    cfg = config.resolved()
    cfg.validate()
    d = cfg.d
    if cfg.er_m is None:
        raise ParameterError("SF graphs need er_m (edges per arriving node)")
    m = int(round(cfg.er_m))
    if m >= d:
        raise ParameterError(f"SF attachment count m={m} must be < d={d}")
    if d < 3:
        raise ParameterError("SF graphs need d >= 3")
    if d == 5:
        warnings.warn("scale-free graphs are not part of the 5-node benchmark grid", stacklevel=2)
    adj_arrival = np.zeros((d, d), dtype=bool)
    repeated: list[int] = []
    targets = list(range(m))
    for new in range(m, d):
        for t in targets:
            adj_arrival[t, new] = True
        repeated.extend(targets)
        repeated.extend([new] * m)
        chosen: set[int] = set()
        while len(chosen) < m and new + 1 < d:
            chosen.add(repeated[int(rng.integers(len(repeated)))])
        targets = sorted(chosen)
    labels = rng.permutation(d)
    adj = np.zeros((d, d), dtype=bool)
    adj[np.ix_(labels, labels)] = adj_arrival
    return Dag(adj)


def grp_partition_count(d: int) -> int:
    return max(2, int(round(d / 5)))


def _partition_sizes(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    mean = d / k
    sizes = np.maximum(1, np.rint(rng.normal(mean, np.sqrt(mean), size=k))).astype(int)
    while sizes.sum() > d:
        sizes[np.argmax(sizes)] -= 1
    while sizes.sum() < d:
        sizes[np.argmin(sizes)] += 1
    return sizes


def sample_grp_with_groups(config: GraphConfig, rng: np.random.Generator) -> tuple[Dag, np.ndarray]:
    """GRP draw plus the partition label of every node."""
    cfg = config.resolved()
    cfg.validate()
    d = cfg.d
    sizes = _partition_sizes(d, grp_partition_count(d), rng)
    block = np.repeat(np.arange(len(sizes)), sizes)
    members = rng.permutation(d)
    group = np.empty(d, dtype=int)
    group[members] = block
    same = group[:, None] == group[None, :]
    prob = np.where(same, cfg.grp_p_in, cfg.grp_p_out)
    perm = rng.permutation(d)
    upper = np.triu(np.ones((d, d), dtype=bool), k=1)
    # prob is indexed by node labels; move it into order coordinates
    keep = upper & (rng.random((d, d)) < prob[np.ix_(perm, perm)])
    adj = np.zeros((d, d), dtype=bool)
    adj[np.ix_(perm, perm)] = keep
    return Dag(adj), group


def sample_grp(config: GraphConfig, rng: np.random.Generator) -> Dag:
    return sample_grp_with_groups(config, rng)[0]


def fully_connected(d: int, rng: np.random.Generator) -> Dag:
    if d < 2:
        raise ParameterError(f"d must be >= 2, got {d}")
    return CausalOrder(tuple(int(i) for i in rng.permutation(d))).full_dag()


def sample_graph(config: GraphConfig) -> Dag:
    """Draw a graph using the config's own seed."""
    rng = child_rng(config.seed, "graph")
    kind = config.kind
    if kind == "ER":
        return sample_er(config, rng)
    if kind == "SF":
        return sample_sf(config, rng)
    if kind == "GRP":
        return sample_grp(config, rng)
    if kind == "FC":
        return fully_connected(config.d, rng)
    raise ParameterError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")


# -- serialization -----------------------------------------------------------

def write_adjacency_csv(g: Dag, path: str | Path) -> None:
    lines = [",".join("1" if v else "0" for v in row) for row in g.adj]
    Path(path).write_text("\n".join(lines) + "\n")


def read_adjacency_csv(path: str | Path) -> Dag:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        try:
            rows.append([int(c) for c in cells])
        except ValueError as exc:
            raise StructuralError(f"{path}: row {lineno}: non-integer entry ({exc})") from None
        if any(c not in (0, 1) for c in rows[-1]):
            raise StructuralError(f"{path}: row {lineno}: entries must be 0 or 1")
    d = len(rows)
    for lineno, r in enumerate(rows, start=1):
        if len(r) != d:
            raise StructuralError(f"{path}: row {lineno} has {len(r)} columns, expected {d}")
    return Dag(np.array(rows, dtype=bool).reshape(d, d))


def format_edge_list(g: Dag) -> str:
    """``d`` on the first line, then one ``i j`` line per edge ``i -> j``."""
    lines = [str(g.d)] + [f"{i} {j}" for i, j in g.edges()]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Dag:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise StructuralError("empty edge list")
    d = int(lines[0])
    edges = []
    for ln in lines[1:]:
        i, j = ln.split()
        edges.append((int(i), int(j)))
    return Dag.from_edges(d, edges)


def format_order(order: CausalOrder) -> str:
    return " ".join(str(i) for i in order.perm) + "\n"


def parse_order(text: str) -> CausalOrder:
    return CausalOrder(tuple(int(t) for t in text.split()))


def as_order(perm: Sequence[int] | CausalOrder) -> CausalOrder:
    return perm if isinstance(perm, CausalOrder) else CausalOrder(tuple(perm))
