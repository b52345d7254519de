"""Leave-one-out retrieval over a distance matrix with precision/recall
and mean average precision."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RetrievalMetrics:
    """Aggregated leave-one-out retrieval quality.

    ``per_query_ap`` holds one average precision per query (NaN where a
    query had no same-class partner and was skipped); ``pr_curve`` is
    the mean (recall, precision) pair at every rank cutoff.
    """

    per_query_ap: np.ndarray
    map: float
    pr_curve: list
    precision_at: dict
    skipped_queries: int


def rank_by_distance(D: np.ndarray, query: int) -> np.ndarray:
    """All vertices except the query, by ascending distance to it; ties
    broken by ascending index."""
    D = _check_distance_matrix(D)
    n = D.shape[0]
    if not 0 <= query < n:
        raise ValueError(f"query {query} out of range for {n} items")
    candidates = np.concatenate([np.arange(query), np.arange(query + 1, n)])
    order = np.argsort(D[query, candidates], kind="stable")
    return candidates[order]


def average_precision(ranking, labels, query_label) -> float:
    """Mean of precision-at-r over the relevant ranks, normalized by the
    number of relevant items in the ranking."""
    labels = np.asarray(labels)
    rel = (labels[np.asarray(ranking, dtype=int)] == query_label).astype(float)
    n_rel = rel.sum()
    if n_rel == 0:
        raise ValueError("no relevant item in the ranking")
    ranks = np.arange(1, rel.size + 1)
    precision = np.cumsum(rel) / ranks
    return float(np.sum(precision * rel) / n_rel)


def _check_distance_matrix(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    scale = float(np.max(np.abs(D))) if D.size else 0.0
    tol = 1e-8 * max(scale, 1e-300)
    if float(np.max(np.abs(D - D.T))) > tol:
        raise ValueError("distance matrix is not symmetric")
    if float(np.max(np.abs(np.diag(D)))) > tol:
        raise ValueError("distance matrix has a nonzero diagonal")
    return D


def evaluate(D: np.ndarray, labels, precision_ranks=(1, 5, 10)) -> RetrievalMetrics:
    """Leave-one-out retrieval with every vertex as a query.

    Precision at rank r is the fraction of same-class items among the
    first r retrieved; recall divides by the total number of same-class
    items available to the query.  Queries whose class has no other
    member are skipped and counted.
    """
    D = _check_distance_matrix(D)
    labels = np.asarray(labels)
    n = D.shape[0]
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match {n} items")
    if np.unique(labels).size < 2:
        raise ValueError("retrieval over a single-class dataset is degenerate")

    R = n - 1
    ap = np.full(n, np.nan)
    precision_sum = np.zeros(R)
    recall_sum = np.zeros(R)
    evaluated = 0
    ranks = np.arange(1, R + 1)
    for query in range(n):
        ranking = rank_by_distance(D, query)
        rel = (labels[ranking] == labels[query]).astype(float)
        n_rel = rel.sum()
        if n_rel == 0:
            continue
        cum = np.cumsum(rel)
        precision = cum / ranks
        ap[query] = float(np.sum(precision * rel) / n_rel)
        precision_sum += precision
        recall_sum += cum / n_rel
        evaluated += 1

    if evaluated == 0:
        raise ValueError("every query was skipped; no class has two members")
    pr_curve = [
        (float(recall_sum[r - 1] / evaluated), float(precision_sum[r - 1] / evaluated))
        for r in ranks
    ]
    precision_at = {
        int(r): float(precision_sum[r - 1] / evaluated) for r in precision_ranks if r <= R
    }
    return RetrievalMetrics(
        per_query_ap=ap,
        map=float(np.nanmean(ap)),
        pr_curve=pr_curve,
        precision_at=precision_at,
        skipped_queries=n - evaluated,
    )
