"""Laplacian averaging for graphs on a shared vertex set.

The arithmetic mean of the two weight vectors over the union edge set
gives the Laplacian nearest to both inputs in summed squared Frobenius
distance.  Used both as a comparison method and as the limit-case oracle
for the coupling solver (identity correspondence, coupling weight to
infinity).
"""

from __future__ import annotations

import numpy as np

from .graph import WeightedGraph


def average_laplacian(g1: WeightedGraph, g2: WeightedGraph) -> WeightedGraph:
    """Graph on the union edge set with weights (w1 + w2) / 2.

    Edges absent from one input contribute weight zero on that side.
    Raises ValueError when vertex counts differ.
    """
    if g1.n != g2.n:
        raise ValueError(f"vertex count mismatch: {g1.n} vs {g2.n}")
    w1 = dict(zip(g1.edges, g1.weights))
    w2 = dict(zip(g2.edges, g2.weights))
    union = sorted(set(w1) | set(w2))
    weights = np.array([0.5 * (w1.get(e, 0.0) + w2.get(e, 0.0)) for e in union])
    return WeightedGraph(g1.n, tuple(union), weights)
