"""Seeded synthetic experiment data: eccentric circle pairs, ring/cracked
ring pairs, feature-based kNN Gaussian graphs, and coupling-function
construction.

All generators are deterministic under a fixed seed and emit graphs that
pass Laplacian validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph
from .optimize import DEFAULT_TIMES, CouplingData
from .spectral import eigendecompose, heat_propagate
from . import graph as _graph


@dataclass(frozen=True)
class PointCloud:
    """Feature vectors (n x d), optionally with integer class labels."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError(f"points must be n x d with d >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=int)
            if lab.shape != (pts.shape[0],):
                raise ValueError(f"labels shape {lab.shape} does not match {pts.shape[0]} points")
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]


def _ring_points(n_per_ring: int) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(n_per_ring) / n_per_ring
    outer = np.column_stack([np.cos(angles), np.sin(angles)])
    inner = np.column_stack(
        [0.25 + 0.45 * np.cos(angles), 0.45 * np.sin(angles)]
    )
    return np.vstack([outer, inner])


def gen_circles(n_per_ring: int = 32, bridge_edges: int = 2, seed: int = 0):
    """Two graphs on the same two eccentric circles, differing only in
    where noise edges bridge the rings.

    Vertices 0..n-1 are the outer circle, n..2n-1 the inner one; each
    ring is a cycle with Gaussian weights of the chord lengths.  Each
    graph gets ``bridge_edges`` bridges at independently seeded outer
    positions, connecting to the geometrically nearest inner vertex with
    the median ring weight.  Returns (graph1, graph2, correspondence)
    with the identity ground-truth correspondence.
    """
    if n_per_ring < 8:
        raise ValueError(f"need at least 8 points per ring, got {n_per_ring}")
    n = n_per_ring
    pts = _ring_points(n)
    rng = np.random.default_rng(seed)

    edges = []
    weights = []
    for ring in (0, 1):
        base = ring * n
        chord = np.linalg.norm(pts[base] - pts[base + 1])
        sigma = 2.0 * chord  # keeps cycle weights at unit order for both radii
        for i in range(n):
            a, b = base + i, base + (i + 1) % n
            d = np.linalg.norm(pts[a] - pts[b])
            edges.append((min(a, b), max(a, b)))
            weights.append(float(np.exp(-(d / sigma) ** 2)))
    bridge_w = float(np.median(weights))

    def with_bridges():
        outer = rng.choice(n, size=bridge_edges, replace=False) if bridge_edges else []
        e = list(edges)
        w = list(weights)
        for o in outer:
            inner = n + int(np.argmin(np.linalg.norm(pts[n:] - pts[o], axis=1)))
            e.append((int(o), inner))
            w.append(bridge_w)
        return WeightedGraph(2 * n, tuple(e), np.asarray(w))

    g1 = with_bridges()
    g2 = with_bridges()
    return g1, g2, np.arange(2 * n)


def _crossing_edges(edges, n: int, cut: int):
    """Edges of a ring graph whose short arc passes the gap between ring
    positions ``cut`` and ``cut + 1`` (mod n)."""
    crossing = set()
    for i, j in edges:
        span = (j - i) % n
        if span <= n - span:
            if (cut - i) % n < span:
                crossing.add((i, j))
        else:
            if (cut - j) % n < n - span:
                crossing.add((i, j))
    return crossing


def gen_ring_pair(n: int = 70, k: int = 4, crack: bool = True, seed: int = 0):
    """A closed ring and a cracked ring on the same sampled circle.

    Both graphs are k-nearest-neighbor Gaussian graphs (self-tuning
    scales) of n jittered points on the unit circle; the cracked graph
    drops every edge crossing a seeded gap position.  Returns
    (closed, cracked, correspondence) with identity correspondence.
    """
    if n < 10:
        raise ValueError(f"need at least 10 samples, got {n}")
    if k < 1:
        raise ValueError(f"need at least 1 neighbor, got {k}")
    rng = np.random.default_rng(seed)
    jitter = 0.3 * rng.uniform(-0.5, 0.5, size=n)
    angles = 2.0 * np.pi * (np.arange(n) + jitter) / n
    pts = np.column_stack([np.cos(angles), np.sin(angles)])
    g1 = knn_gaussian_graph(PointCloud(pts), k=k, self_tuning=True)
    if not crack:
        return g1, g1, np.arange(n)
    cut = int(rng.integers(n))
    crossing = _crossing_edges(g1.edges, n, cut)
    keep = [l for l, e in enumerate(g1.edges) if e not in crossing]
    g2 = WeightedGraph(n, tuple(g1.edges[l] for l in keep), g1.weights[keep])
    return g1, g2, np.arange(n)


def removed_edges(g_full: WeightedGraph, g_reduced: WeightedGraph):
    """Edges present in the first graph but absent from the second."""
    reduced = set(g_reduced.edges)
    return tuple(e for e in g_full.edges if e not in reduced)


def knn_gaussian_graph(
    pc: PointCloud | np.ndarray,
    k: int,
    self_tuning: bool = True,
    sigma: float | None = None,
) -> WeightedGraph:
    """k-nearest-neighbor graph with Gaussian edge weights.

    Edge (i, j) exists when i is among j's k nearest Euclidean neighbors
    or vice versa; its weight is exp(-d_ij^2 / (s_i s_j)) where s_i is
    the distance to i's k-th nearest neighbor (self-tuning) or the
    global ``sigma``.
    """
    pts = pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=float)
    n = pts.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if not self_tuning:
        if sigma is None or not (np.isfinite(sigma) and sigma > 0):
            raise ValueError("a positive global sigma is required when self_tuning=False")

    diff = pts[:, None, :] - pts[None, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=2))
    Dsort = D.copy()
    np.fill_diagonal(Dsort, -1.0)  # self always sorts first
    order = np.argsort(Dsort, axis=1, kind="stable")

    if self_tuning:
        scales = D[np.arange(n), order[:, k]]
        bad = np.flatnonzero(scales == 0)
        if bad.size:
            raise ValueError(
                f"vertex {int(bad[0])} has a duplicate among its {k} nearest neighbors "
                "(self-tuning scale would be zero)"
            )
    else:
        scales = np.full(n, float(sigma))

    pairs = set()
    for i in range(n):
        for v in order[i, 1 : k + 1]:
            pairs.add((min(i, int(v)), max(i, int(v))))
    edges = tuple(sorted(pairs))
    weights = np.empty(len(edges))
    for l, (i, j) in enumerate(edges):
        if D[i, j] == 0:
            raise ValueError(f"duplicate points at indices {i} and {j}")
        weights[l] = np.exp(-(D[i, j] ** 2) / (scales[i] * scales[j]))
    return WeightedGraph(n, edges, weights)


def landmark_coupling_functions(
    g1: WeightedGraph,
    g2: WeightedGraph,
    pairs,
    smoothing_t: float = 0.0,
    times=DEFAULT_TIMES,
) -> CouplingData:
    """Corresponding functions as unit-mass heat bumps at landmark pairs.

    Column j of each function matrix is exp(-smoothing_t L) applied to
    the indicator of landmark j; with smoothing_t = 0 the columns are
    one-hot.  Every column sums to one (heat conserves mass).
    """
    if smoothing_t < 0 or not np.isfinite(smoothing_t):
        raise ValueError(f"smoothing time must be finite and >= 0, got {smoothing_t}")
    pairs = [(int(a), int(b)) for a, b in pairs]
    for a, b in pairs:
        if not 0 <= a < g1.n:
            raise ValueError(f"landmark {a} out of range for graph 1 (n={g1.n})")
        if not 0 <= b < g2.n:
            raise ValueError(f"landmark {b} out of range for graph 2 (n={g2.n})")

    def bumps(g, idxs):
        F = np.zeros((g.n, len(idxs)))
        for col, v in enumerate(idxs):
            F[v, col] = 1.0
        if smoothing_t > 0:
            dec = eigendecompose(_graph.laplacian(g))
            F = np.column_stack([heat_propagate(dec, F[:, c], smoothing_t) for c in range(F.shape[1])])
        return F

    F = bumps(g1, [a for a, _ in pairs])
    G = bumps(g2, [b for _, b in pairs])
    return CouplingData(funcs1=F, funcs2=G, times=times)


def class_indicator_functions(labels) -> np.ndarray:
    """One 0/1 indicator column per class value (columns in sorted class order)."""
    labels = np.asarray(labels, dtype=int)
    classes = np.unique(labels)
    return (labels[:, None] == classes[None, :]).astype(float)


def gen_ambiguous_modalities(
    n: int = 120,
    n_classes: int = 4,
    dim: int = 8,
    seed: int = 0,
    ambiguity: float = 1.6,
    separation: float = 6.0,
):
    """Two feature modalities of one labeled dataset, each with a
    deliberately ambiguous class pair.

    Modality A draws classes 0 and 1 from nearby Gaussian clusters
    (center gap ``ambiguity``) and keeps the rest ``separation`` apart;
    modality B confuses classes 2 and 3 instead.  Returns
    (PointCloud A, PointCloud B) sharing one label vector.
    """
    if n % n_classes:
        raise ValueError(f"{n} points do not split evenly into {n_classes} classes")
    if dim < 7:
        raise ValueError(f"need dim >= 7 to separate the cluster axes, got {dim}")
    rng = np.random.default_rng(seed)
    per = n // n_classes
    labels = np.repeat(np.arange(n_classes), per)

    def axis(i):
        e = np.zeros(dim)
        e[i] = 1.0
        return e

    centers_a = [np.zeros(dim), ambiguity * axis(0), separation * axis(1), separation * axis(2)]
    centers_b = [np.zeros(dim), separation * axis(3), separation * axis(4), separation * axis(4) + ambiguity * axis(5)]
    # classes beyond the first four spread along remaining axes
    for c in range(4, n_classes):
        centers_a.append(separation * (c - 1) * axis(2))
        centers_b.append(separation * (c - 1) * axis(4) + separation * axis(6))

    def draw(centers):
        pts = np.vstack([centers[c] + rng.normal(size=(per, dim)) for c in range(n_classes)])
        return PointCloud(pts, labels.copy())

    return draw(centers_a), draw(centers_b)
