"""Spectral primitives: eigendecompositions, heat kernels, matrix
exponentials, directional derivatives of the exponential, and diffusion
distances.

Heat kernels of symmetric Laplacians go through one eigendecomposition
that is reused for every time sample.  The general (non-symmetric)
matrix exponential is a Padé-13 scaling-and-squaring routine, needed for
the 2n x 2n block matrices whose upper-right block is the directional
derivative of exp(-tL).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-10

# Padé [13/13] numerator coefficients for exp(x); the denominator shares
# them with alternating signs.
_PADE13_B = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)

# Scale A so ||A/2^s||_1 falls at or below this before applying the
# approximant; conservative relative to the order-13 stability radius.
_SCALE_TARGET = 0.5


@dataclass(frozen=True)
class SpectralDecomposition:
    """Orthonormal eigenvectors (columns) and ascending eigenvalues."""

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def eigendecompose(L: np.ndarray) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Raises ValueError if the input is not symmetric to within
    ``1e-10 * max|L|``.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {L.shape}")
    scale = float(np.max(np.abs(L))) if L.size else 0.0
    asym = float(np.max(np.abs(L - L.T))) if L.size else 0.0
    if asym > SYMMETRY_TOL * max(scale, 1e-300):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    lam, phi = np.linalg.eigh(L)
    return SpectralDecomposition(eigenvectors=phi, eigenvalues=lam)


def heat_kernel(dec: SpectralDecomposition, t: float) -> np.ndarray:
    """Heat operator exp(-tL) assembled in the eigenbasis, symmetrized."""
    t = float(t)
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"time must be finite and >= 0, got {t}")
    phi = dec.eigenvectors
    H = (phi * np.exp(-t * dec.eigenvalues)) @ phi.T
    return 0.5 * (H + H.T)


def heat_propagate(dec: SpectralDecomposition, f: np.ndarray, t: float) -> np.ndarray:
    """Solution exp(-tL) f of the heat equation with initial condition f."""
    t = float(t)
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"time must be finite and >= 0, got {t}")
    phi = dec.eigenvectors
    return (phi * np.exp(-t * dec.eigenvalues)) @ (phi.T @ np.asarray(f, dtype=float))


def _pade13(A: np.ndarray) -> np.ndarray:
    b = _PADE13_B
    n = A.shape[0]
    I = np.eye(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I
    return np.linalg.solve(V - U, V + U)


def matrix_exponential(A: np.ndarray) -> np.ndarray:
    """exp(A) for a general square matrix by scaling and squaring.

    The matrix is scaled by a power of two until its 1-norm is at most
    0.5, passed through the diagonal Padé-13 approximant, and squared
    back up.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    norm = float(np.linalg.norm(A, 1)) if A.size else 0.0
    s = max(0, int(np.ceil(np.log2(norm / _SCALE_TARGET)))) if norm > _SCALE_TARGET else 0
    E = _pade13(A / 2.0**s)
    for _ in range(s):
        E = E @ E
    return E


def expm_frechet_block(L: np.ndarray, direction: np.ndarray, t: float) -> np.ndarray:
    """Directional derivative of exp(-tL) along ``direction``.

    Exponentiates the 2n x 2n block matrix [[-tL, -tE], [0, -tL]] and
    returns its upper-right n x n block, which equals
    d/dh exp(-t(L + h E)) at h = 0.
    """
    L = np.asarray(L, dtype=float)
    E = np.asarray(direction, dtype=float)
    if L.shape != E.shape or L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"dimension mismatch: L {L.shape}, direction {E.shape}")
    n = L.shape[0]
    B = np.zeros((2 * n, 2 * n))
    B[:n, :n] = -t * L
    B[n:, n:] = -t * L
    B[:n, n:] = -t * E
    return matrix_exponential(B)[:n, n:]


def diffusion_distance_matrix(dec: SpectralDecomposition, t: float) -> np.ndarray:
    """Pairwise diffusion distances at time t.

    d_t(p, q) is the Euclidean distance between rows p and q of the
    matrix of eigenvectors scaled columnwise by exp(-t * eigenvalue),
    equivalently between rows of the heat kernel at time t.
    """
    t = float(t)
    if not np.isfinite(t) or t <= 0:
        raise ValueError(f"time must be finite and > 0, got {t}")
    psi = dec.eigenvectors * np.exp(-t * dec.eigenvalues)
    n = psi.shape[0]
    D = np.zeros((n, n))
    # row-by-row differences avoid the cancellation of the Gram-matrix trick
    for p in range(n):
        diff = psi - psi[p]
        D[p] = np.sqrt(np.sum(diff * diff, axis=1))
        D[p, p] = 0.0
    return 0.5 * (D + D.T)
