"""Ground-truth network topologies, covariance construction and Gaussian sampling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import networkx as nx
import numpy as np

TOPOLOGIES = ("scale_free", "hubby", "chain")

# Hub layout reference values, stated for a 500-node graph and scaled
# proportionally for other sizes.
_HUB_COUNT_REF = 20
_HUB_DEG_LO = 4
_HUB_DEG_HI_REF = 92
_REF_NODES = 500

_PD_EIG_FLOOR = 1e-8
_PD_REPAIR_CAP = 100


class SignalLevel(NamedTuple):
    """Mean and standard deviation of covariances on connected node pairs."""

    mean: float
    sd: float


STRONG_SIGNAL = SignalLevel(0.32, 0.13)
WEAK_SIGNAL = SignalLevel(0.25, 0.09)

SIGNALS = {"strong": STRONG_SIGNAL, "weak": WEAK_SIGNAL}


def _normalize_pair(i: int, j: int) -> tuple[int, int]:
    if i == j:
        raise ValueError(f"self-loop ({i}, {j}) is not a valid edge")
    return (int(i), int(j)) if i < j else (int(j), int(i))


@dataclass(frozen=True)
class EdgeSet:
    """Undirected graph given as unordered node pairs (i, j), 0 <= i < j < n_nodes."""

    n_nodes: int
    edges: frozenset

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be positive")
        for i, j in self.edges:
            if not (0 <= i < j < self.n_nodes):
                raise ValueError(f"edge ({i}, {j}) out of range for {self.n_nodes} nodes")

    @classmethod
    def from_pairs(cls, n_nodes: int, pairs: Iterable[tuple[int, int]]) -> "EdgeSet":
        return cls(n_nodes, frozenset(_normalize_pair(i, j) for i, j in pairs))

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, pair) -> bool:
        i, j = pair
        return _normalize_pair(i, j) in self.edges

    def to_array(self) -> np.ndarray:
        """Edges as a sorted (m, 2) integer array."""
        if not self.edges:
            return np.empty((0, 2), dtype=np.int64)
        return np.array(sorted(self.edges), dtype=np.int64)

    @property
    def max_edges(self) -> int:
        return self.n_nodes * (self.n_nodes - 1) // 2


@dataclass(frozen=True)
class DataMatrix:
    """An n x d data matrix with optional column labels."""

    values: np.ndarray
    column_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        if not np.isfinite(values).all():
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)
        if self.column_names is not None and len(self.column_names) != values.shape[1]:
            raise ValueError("column_names length must match the number of columns")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


# Covariance matrices are plain symmetric positive definite arrays.
CovarianceMatrix = np.ndarray


def as_values(X) -> np.ndarray:
    """Coerce a DataMatrix or array-like to a float ndarray."""
    if isinstance(X, DataMatrix):
        return X.values
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d data matrix")
    return arr


def gen_topology(kind: str, n_nodes: int, target_edges: Optional[int] = None,
                 seed: int = 0) -> EdgeSet:
    """Generate a ground-truth topology: scale_free, hubby or chain.

    Parameters
    ----------
    kind : str
        One of "scale_free", "hubby", "chain".
    n_nodes : int
        Number of nodes, at least 2.
    target_edges : int, optional
        Exact edge count for scale_free graphs (preferential attachment
        followed by random edge addition/removal). Ignored otherwise.
    seed : int
        Seed for all random choices.
    """
    if n_nodes < 2:
        raise ValueError("n_nodes must be at least 2")
    if kind == "chain":
        return EdgeSet.from_pairs(n_nodes, ((i, i + 1) for i in range(n_nodes - 1)))
    rng = np.random.default_rng(seed)
    if kind == "scale_free":
        return _gen_scale_free(n_nodes, target_edges, rng)
    if kind == "hubby":
        return _gen_hubby(n_nodes, rng)
    raise ValueError(f"unknown topology kind {kind!r}; expected one of {TOPOLOGIES}")


def _gen_scale_free(n_nodes: int, target_edges: Optional[int],
                    rng: np.random.Generator) -> EdgeSet:
    max_edges = n_nodes * (n_nodes - 1) // 2
    if target_edges is None:
        target_edges = n_nodes - 1  # preferential-attachment tree size
    if not (1 <= target_edges <= max_edges):
        raise ValueError(f"target_edges must be in [1, {max_edges}]")
    graph = nx.barabasi_albert_graph(n_nodes, 1, seed=int(rng.integers(0, 2**31 - 1)))
    edges = {_normalize_pair(i, j) for i, j in graph.edges}
    if len(edges) > target_edges:
        ordered = sorted(edges)
        drop = rng.choice(len(ordered), size=len(edges) - target_edges, replace=False)
        for k in drop:
            edges.discard(ordered[k])
    while len(edges) < target_edges:
        i, j = rng.integers(0, n_nodes, size=2)
        if i != j:
            edges.add(_normalize_pair(i, j))
    return EdgeSet(n_nodes, frozenset(edges))


def _gen_hubby(n_nodes: int, rng: np.random.Generator) -> EdgeSet:
    # Hub count scales with the node count; the degree range does not, so the
    # highest-degree hub keeps its many weak connections at any graph size.
    n_hubs = max(1, round(_HUB_COUNT_REF * n_nodes / _REF_NODES))
    deg_hi = min(_HUB_DEG_HI_REF, n_nodes - n_hubs)
    if deg_hi < _HUB_DEG_LO:
        raise ValueError("n_nodes too small for a hubby layout")
    nodes = rng.permutation(n_nodes)
    hubs, others = nodes[:n_hubs], nodes[n_hubs:]
    # log-uniform degrees spanning the full range, extremes forced
    degrees = np.exp(rng.uniform(np.log(_HUB_DEG_LO), np.log(deg_hi), size=n_hubs))
    degrees = np.round(degrees).astype(int)
    degrees[0] = deg_hi
    if n_hubs > 1:
        degrees[-1] = _HUB_DEG_LO
    edges = set()
    for hub, deg in zip(hubs, degrees):
        deg = min(int(deg), len(others))
        for other in rng.choice(others, size=deg, replace=False):
            edges.add(_normalize_pair(hub, other))
    return EdgeSet(n_nodes, frozenset(edges))


def build_covariance(edges: EdgeSet, signal: SignalLevel, seed: int = 0) -> np.ndarray:
    """Unit-diagonal positive-definite covariance with signal on connected pairs.

    Covariances for connected pairs are drawn from Normal(signal.mean,
    signal.sd^2); the matrix is then repaired to strict positive definiteness
    by repeatedly adding a small ridge and rescaling to unit diagonal.
    """
    if signal.mean <= 0 or signal.sd < 0:
        raise ValueError("signal must have mean > 0 and sd >= 0")
    d = edges.n_nodes
    rng = np.random.default_rng(seed)
    cov = np.eye(d)
    for i, j in sorted(edges.edges):
        v = rng.normal(signal.mean, signal.sd)
        cov[i, j] = cov[j, i] = v
    for _ in range(_PD_REPAIR_CAP):
        lam_min = np.linalg.eigvalsh(cov)[0]
        if lam_min > _PD_EIG_FLOOR:
            return cov
        eps = max(0.0, 1e-6 - lam_min)
        cov = (cov + eps * np.eye(d)) / (1.0 + eps)
    raise RuntimeError("positive-definiteness repair did not converge")


def sample_gaussian(cov: np.ndarray, n: int, seed: int = 0) -> DataMatrix:
    """Draw n i.i.d. rows from a zero-mean multivariate normal."""
    cov = np.asarray(cov, dtype=float)
    if n < 1:
        raise ValueError("n must be at least 1")
    chol = np.linalg.cholesky(cov)  # raises LinAlgError on non-PD input
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((n, cov.shape[0])) @ chol.T
    return DataMatrix(values)
