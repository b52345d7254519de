"""CSV and JSON file formats shared by the command-line pipeline.

Matrices are comma-separated, row-major, no header, 17 significant
digits (lossless double round-trip).  Labels are one integer per line.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .datasets import PointCloud


def save_matrix_csv(path, M: np.ndarray) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [",".join(format(v, ".17g") for v in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def save_vector_csv(path, v: np.ndarray) -> None:
    save_matrix_csv(path, np.asarray(v, dtype=float).reshape(-1, 1))


def load_vector_csv(path) -> np.ndarray:
    M = load_matrix_csv(path)
    if 1 not in M.shape and M.ndim == 2 and M.size != max(M.shape):
        raise ValueError(f"{path}: expected a vector, got shape {M.shape}")
    return M.reshape(-1)


def save_labels_csv(path, labels) -> None:
    Path(path).write_text("\n".join(str(int(x)) for x in labels) + "\n")


def load_labels_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=int, ndmin=1).reshape(-1)


def load_point_cloud_csv(path, labeled: bool = False) -> PointCloud:
    """Point cloud CSV: one row per point; with ``labeled`` the final
    column is an integer class id."""
    M = load_matrix_csv(path)
    if labeled:
        if M.shape[1] < 2:
            raise ValueError(f"{path}: labeled point cloud needs at least 2 columns")
        return PointCloud(M[:, :-1], M[:, -1].astype(int))
    return PointCloud(M)


def load_landmarks_json(path) -> list:
    doc = json.loads(Path(path).read_text())
    return [(int(a), int(b)) for a, b in doc]


def save_landmarks_json(path, pairs) -> None:
    write_json(path, [[int(a), int(b)] for a, b in pairs])


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
