"""Weighted simple graphs, Laplacian construction, and validity checking.

A graph is a fixed vertex count, a fixed lexicographically ordered edge
list, and a nonnegative weight per edge.  The weight vector is the
parametrization every other module optimizes over: the map
``weights -> laplacian`` keeps the Laplacian valid (symmetric, nonpositive
off-diagonals confined to the edge set, zero row sums) for any
nonnegative weights by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

Edge = tuple[int, int]

# Scale-relative tolerances for Laplacian validity checks.
ENTRY_TOL = 1e-10
ROWSUM_TOL = 1e-10


class GraphFormatError(ValueError):
    """An edge list or graph file violates the format contract."""


def _canonical_edges(n: int, edges, weights) -> tuple[tuple[Edge, ...], np.ndarray]:
    """Validate and sort edges lexicographically, reordering weights to match."""
    pairs = [(int(i), int(j)) for i, j in edges]
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(pairs) != w.shape[0]:
        raise GraphFormatError(
            f"{len(pairs)} edges but {w.shape} weight entries"
        )
    for i, j in pairs:
        if i == j:
            raise GraphFormatError(f"self-loop ({i},{j}) not allowed")
        if not (0 <= i < j < n):
            raise GraphFormatError(f"edge ({i},{j}) out of range for n={n} (need 0 <= i < j < n)")
    if len(set(pairs)) != len(pairs):
        seen = set()
        dup = next(p for p in pairs if p in seen or seen.add(p))
        raise GraphFormatError(f"duplicate edge {dup}")
    if not np.all(np.isfinite(w)):
        raise GraphFormatError("non-finite edge weight")
    if np.any(w < 0):
        bad = int(np.argmin(w))
        raise GraphFormatError(f"negative weight {w[bad]} at edge index {bad}")
    order = sorted(range(len(pairs)), key=lambda l: pairs[l])
    return tuple(pairs[l] for l in order), w[order]


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected simple graph with a fixed edge set and nonnegative weights.

    Edges are stored in canonical lexicographic order (the constructor
    sorts them), which defines the index of each entry of ``weights``.
    Instances are immutable; build modified copies with ``with_weights``.
    """

    n: int
    edges: tuple[Edge, ...]
    weights: np.ndarray

    def __post_init__(self):
        if self.n <= 0:
            raise GraphFormatError(f"vertex count must be positive, got {self.n}")
        edges, w = _canonical_edges(self.n, self.edges, self.weights)
        w.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return len(self.edges)

    def with_weights(self, weights) -> "WeightedGraph":
        """Same vertex and edge set, new weight vector (canonical order)."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.m,):
            raise GraphFormatError(f"expected {self.m} weights, got shape {w.shape}")
        return WeightedGraph(self.n, self.edges, w)

    def edge_index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint index vectors (ei, ej), aligned with the weight vector."""
        if self.m == 0:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        ei, ej = zip(*self.edges)
        return np.asarray(ei, dtype=int), np.asarray(ej, dtype=int)


def weights_to_adjacency(g: WeightedGraph) -> np.ndarray:
    """Symmetric adjacency matrix with W[i,j] = weight of edge (i,j)."""
    W = np.zeros((g.n, g.n))
    ei, ej = g.edge_index_arrays()
    W[ei, ej] = g.weights
    W[ej, ei] = g.weights
    return W


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Unnormalized Laplacian L = D - W (D = diagonal of row sums of W)."""
    return laplacian_from_weights(g.edges, g.n, g.weights)


def laplacian_from_weights(edges, n: int, u) -> np.ndarray:
    """Laplacian of the graph (n, edges) at weight vector u >= 0.

    This is the smooth map the optimizer differentiates through: entry
    (i,i) and (j,j) gain u_l, entries (i,j) and (j,i) get -u_l, for the
    l-th edge (i,j).
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        bad = int(np.argmin(u))
        raise GraphFormatError(f"negative weight {u[bad]} at edge index {bad}")
    if len(edges) != u.shape[0]:
        raise GraphFormatError(f"{len(edges)} edges but {u.shape[0]} weights")
    L = np.zeros((n, n))
    if len(edges) == 0:
        return L
    ei, ej = zip(*edges)
    ei = np.asarray(ei, dtype=int)
    ej = np.asarray(ej, dtype=int)
    # np.add.at accumulates repeated indices (vertices shared by edges)
    np.subtract.at(L, (ei, ej), u)
    np.subtract.at(L, (ej, ei), u)
    np.add.at(L, (ei, ei), u)
    np.add.at(L, (ej, ej), u)
    return L


@dataclass(frozen=True)
class PropertyCheck:
    passed: bool
    max_violation: float


@dataclass(frozen=True)
class LaplacianReport:
    """Per-property validity report for a candidate Laplacian matrix.

    ``symmetric_nonpositive``: off-diagonals symmetric and <= 0.
    ``sparsity``: off-diagonal support confined to the edge set.
    ``row_sums``: every row sums to zero.
    """

    symmetric_nonpositive: PropertyCheck
    sparsity: PropertyCheck
    row_sums: PropertyCheck

    @property
    def ok(self) -> bool:
        return (
            self.symmetric_nonpositive.passed
            and self.sparsity.passed
            and self.row_sums.passed
        )


def validate_laplacian(L: np.ndarray, edges) -> LaplacianReport:
    """Check the three defining properties of a valid Laplacian on ``edges``.

    Tolerances are scale-relative: entrywise checks use
    ``1e-10 * max|L|``, row sums use ``1e-10 * n * max|L|``.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {L.shape}")
    n = L.shape[0]
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i},{j}) exceeds matrix dimension {n}")

    scale = float(np.max(np.abs(L))) if L.size else 0.0
    entry_tol = ENTRY_TOL * scale
    off = ~np.eye(n, dtype=bool)

    asym = float(np.max(np.abs(L - L.T))) if n else 0.0
    pos_off = float(np.max(L[off], initial=0.0)) if n > 1 else 0.0
    v1 = max(asym, pos_off)

    edge_mask = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        edge_mask[i, j] = edge_mask[j, i] = True
    nonedge_off = off & ~edge_mask
    v2 = float(np.max(np.abs(L[nonedge_off]), initial=0.0))

    v3 = float(np.max(np.abs(L.sum(axis=1)), initial=0.0))

    return LaplacianReport(
        symmetric_nonpositive=PropertyCheck(v1 <= entry_tol, v1),
        sparsity=PropertyCheck(v2 <= entry_tol, v2),
        row_sums=PropertyCheck(v3 <= ROWSUM_TOL * n * scale, v3),
    )


def graph_to_dict(g: WeightedGraph) -> dict:
    return {
        "n": g.n,
        "edges": [[i, j, float(w)] for (i, j), w in zip(g.edges, g.weights)],
    }


def graph_from_dict(doc: dict) -> WeightedGraph:
    try:
        n = int(doc["n"])
        entries = doc["edges"]
    except (KeyError, TypeError) as exc:
        raise GraphFormatError(f"graph document missing field: {exc}") from exc
    edges = []
    weights = []
    for entry in entries:
        if len(entry) != 3:
            raise GraphFormatError(f"edge entry {entry!r} is not [i, j, w]")
        i, j, w = entry
        edges.append((int(i), int(j)))
        weights.append(float(w))
    return WeightedGraph(n, tuple(edges), np.asarray(weights, dtype=float))


def save_graph(g: WeightedGraph, path) -> None:
    """Write the graph JSON document (edges in canonical order)."""
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=2, sort_keys=True) + "\n")


def load_graph(path) -> WeightedGraph:
    """Load a graph JSON document; malformed entries raise GraphFormatError."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path}: not valid JSON ({exc})") from exc
    return graph_from_dict(doc)
