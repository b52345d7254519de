"""Coupling objective, analytic gradient, and bound-constrained solver.

Given two weighted graphs and q corresponding functions (columns of
``funcs1`` on graph 1 and ``funcs2`` on graph 2), the solver minimally
modifies both weight vectors so the projections of the heat kernels onto
the functions agree at every time sample:

    sum_k ||L_k(u_k) - L_k||_F^2
      + alpha * sum_m ||F' exp(-t_m L_1(u_1)) F - G' exp(-t_m L_2(u_2)) G||_F^2

over u_1, u_2 >= 0, with the edge sets fixed.

The gradient of the coupling term is assembled in the eigenbasis of each
modified Laplacian: the derivative of exp(-tL) along a symmetric
direction is Phi (K o (Phi' E Phi)) Phi' with K the first divided
differences of x -> exp(-tx) on the eigenvalues, and the trace against
the residual direction turns into a single dense matrix from which every
per-edge derivative is read off.  The per-edge block-exponential route
(``method="block"``) computes the identical quantity one edge at a time
and is kept for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import WeightedGraph, laplacian, laplacian_from_weights
from .spectral import (
    SpectralDecomposition,
    eigendecompose,
    expm_frechet_block,
    heat_kernel,
)

DEFAULT_TIMES = (0.5, 1.0, 2.0)
DEFAULT_ALPHA = 1e6


class CouplingNumericalError(RuntimeError):
    """Non-finite cost or gradient during optimization.

    Carries the offending iterate and the cost trajectory up to it.
    """

    def __init__(self, message, iteration, weights1, weights2, trajectory):
        super().__init__(message)
        self.iteration = iteration
        self.weights1 = weights1
        self.weights2 = weights2
        self.trajectory = trajectory


def _is_constant_columns(M: np.ndarray) -> np.ndarray:
    spread = M.max(axis=0) - M.min(axis=0)
    scale = np.maximum(np.abs(M).max(axis=0), 1.0)
    return spread <= 1e-12 * scale


@dataclass(frozen=True)
class CouplingData:
    """Corresponding functions on two graphs plus the time-sample set.

    ``funcs1`` is n1 x q, ``funcs2`` is n2 x q; column j of each is one
    corresponding pair.  ``times`` must be strictly increasing positive
    reals.
    """

    funcs1: np.ndarray
    funcs2: np.ndarray
    times: tuple[float, ...] = DEFAULT_TIMES

    def __post_init__(self):
        F = np.asarray(self.funcs1, dtype=float)
        G = np.asarray(self.funcs2, dtype=float)
        if F.ndim == 1:
            F = F[:, None]
        if G.ndim == 1:
            G = G[:, None]
        if F.shape[1] != G.shape[1]:
            raise ValueError(f"function count mismatch: {F.shape[1]} vs {G.shape[1]}")
        if F.shape[1] < 1:
            raise ValueError("at least one corresponding function is required")
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
            raise ValueError("corresponding functions must be finite")
        times = tuple(float(t) for t in self.times)
        if not times:
            raise ValueError("at least one time sample is required")
        arr = np.asarray(times)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError(f"times must be finite and positive, got {times}")
        if np.any(np.diff(arr) <= 0):
            raise ValueError(f"times must be strictly increasing, got {times}")
        if np.all(_is_constant_columns(F)) or np.all(_is_constant_columns(G)):
            raise ValueError(
                "all function columns are constant; constant functions carry "
                "no coupling information"
            )
        object.__setattr__(self, "funcs1", F)
        object.__setattr__(self, "funcs2", G)
        object.__setattr__(self, "times", times)

    @property
    def q(self) -> int:
        return self.funcs1.shape[1]


@dataclass(frozen=True)
class CouplingProblem:
    """Two graphs, their corresponding functions, and the coupling weight."""

    graph1: WeightedGraph
    graph2: WeightedGraph
    coupling: CouplingData
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.coupling.funcs1.shape[0] != self.graph1.n:
            raise ValueError(
                f"funcs1 has {self.coupling.funcs1.shape[0]} rows, graph1 has {self.graph1.n} vertices"
            )
        if self.coupling.funcs2.shape[0] != self.graph2.n:
            raise ValueError(
                f"funcs2 has {self.coupling.funcs2.shape[0]} rows, graph2 has {self.graph2.n} vertices"
            )
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class CostBreakdown:
    distance: float
    coupling: float
    alpha: float

    @property
    def total(self) -> float:
        return self.distance + self.alpha * self.coupling


@dataclass
class SolverConfig:
    tol: float = 1e-8          # relative decrease of the total cost
    gtol: float = 1e-6         # unit-step projected-gradient norm
    max_iter: int = 2000
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    gradient_method: str = "spectral"
    threads: int = 0           # workers for the block gradient route; 0 = serial


@dataclass(frozen=True)
class CouplingSolution:
    weights1: np.ndarray
    weights2: np.ndarray
    cost_trajectory: np.ndarray
    final_distance_term: float
    final_coupling_term: float
    alpha: float
    iterations: int
    converged: bool
    termination: str

    @property
    def final_total(self) -> float:
        return self.final_distance_term + self.alpha * self.final_coupling_term


def coupling_residuals(
    L1: np.ndarray, L2: np.ndarray, coupling: CouplingData
) -> tuple[list[np.ndarray], float]:
    """Per-time q x q residuals F'exp(-tL1)F - G'exp(-tL2)G and their
    total squared Frobenius norm."""
    F, G = coupling.funcs1, coupling.funcs2
    if L1.shape != (F.shape[0], F.shape[0]):
        raise ValueError(f"L1 shape {L1.shape} does not match funcs1 rows {F.shape[0]}")
    if L2.shape != (G.shape[0], G.shape[0]):
        raise ValueError(f"L2 shape {L2.shape} does not match funcs2 rows {G.shape[0]}")
    dec1 = eigendecompose(L1)
    dec2 = eigendecompose(L2)
    residuals = _residuals_from_decs(dec1, dec2, coupling)
    total = float(sum(np.sum(R * R) for R in residuals))
    return residuals, total


def _residuals_from_decs(dec1, dec2, coupling) -> list[np.ndarray]:
    F, G = coupling.funcs1, coupling.funcs2
    out = []
    for t in coupling.times:
        H1 = heat_kernel(dec1, t)
        H2 = heat_kernel(dec2, t)
        out.append(F.T @ H1 @ F - G.T @ H2 @ G)
    return out


@dataclass(frozen=True)
class _Evaluation:
    L1t: np.ndarray
    L2t: np.ndarray
    dec1: SpectralDecomposition
    dec2: SpectralDecomposition
    residuals: list
    cost: CostBreakdown


def _check_weights(u, g: WeightedGraph, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (g.m,):
        raise ValueError(f"{name} has shape {u.shape}, expected ({g.m},)")
    if np.any(u < 0):
        raise ValueError(f"{name} has negative entries")
    return u


def _evaluate(u1, u2, prob: CouplingProblem, L1o, L2o) -> _Evaluation:
    L1t = laplacian_from_weights(prob.graph1.edges, prob.graph1.n, u1)
    L2t = laplacian_from_weights(prob.graph2.edges, prob.graph2.n, u2)
    dec1 = eigendecompose(L1t)
    dec2 = eigendecompose(L2t)
    residuals = _residuals_from_decs(dec1, dec2, prob.coupling)
    distance = float(np.sum((L1t - L1o) ** 2) + np.sum((L2t - L2o) ** 2))
    coup = float(sum(np.sum(R * R) for R in residuals))
    return _Evaluation(L1t, L2t, dec1, dec2, residuals, CostBreakdown(distance, coup, prob.alpha))


def coupling_cost(u1, u2, prob: CouplingProblem) -> CostBreakdown:
    """Distance term, coupling term, and their alpha-weighted total."""
    u1 = _check_weights(u1, prob.graph1, "u1")
    u2 = _check_weights(u2, prob.graph2, "u2")
    ev = _evaluate(u1, u2, prob, laplacian(prob.graph1), laplacian(prob.graph2))
    return ev.cost


def _exp_divided_differences(lam: np.ndarray, t: float) -> np.ndarray:
    """First divided differences of x -> exp(-t x) on the eigenvalue grid.

    Entry (a, b) is (exp(-t lam_a) - exp(-t lam_b)) / (lam_a - lam_b),
    continued as -t exp(-t lam_a) across the diagonal.  Small gaps use
    the sinh form to avoid cancellation.
    """
    a = lam[:, None]
    b = lam[None, :]
    gap = a - b
    x = 0.5 * t * gap
    small = np.abs(x) < 1.0

    ea = np.exp(-t * lam)
    K = np.zeros_like(gap)
    big = ~small
    if np.any(big):
        K[big] = (ea[:, None] - ea[None, :])[big] / gap[big]
    xs = x[small]
    sinhc = np.ones_like(xs)
    nz = np.abs(xs) > 0
    sinhc[nz] = np.sinh(xs[nz]) / xs[nz]
    K[small] = -t * np.exp(-0.5 * t * (a + b))[small] * sinhc
    return K


def _edge_gather(S: np.ndarray, ei: np.ndarray, ej: np.ndarray) -> np.ndarray:
    """Frobenius inner product of symmetric S with each per-edge Laplacian
    direction (+1 on both diagonal slots, -1 on both off-diagonal slots)."""
    return S[ei, ei] + S[ej, ej] - 2.0 * S[ei, ej]


def _coupling_weighted_sum(ev: _Evaluation, coupling: CouplingData, which: int) -> np.ndarray:
    """Sum over time samples of the adjoint matrices M whose per-edge
    gather yields the coupling-term gradient for graph ``which``."""
    dec = ev.dec1 if which == 1 else ev.dec2
    funcs = coupling.funcs1 if which == 1 else coupling.funcs2
    sign = 1.0 if which == 1 else -1.0
    phi, lam = dec.eigenvectors, dec.eigenvalues
    S = np.zeros((dec.n, dec.n))
    for R, t in zip(ev.residuals, coupling.times):
        A = sign * (funcs @ R @ funcs.T)
        K = _exp_divided_differences(lam, t)
        S += phi @ (K * (phi.T @ A @ phi)) @ phi.T
    return S


def coupling_gradient(u1, u2, prob: CouplingProblem, method: str = "spectral", threads: int = 0):
    """Gradient of the total cost with respect to both weight vectors.

    ``method="spectral"`` reuses the eigendecomposition of each modified
    Laplacian for all time samples; ``method="block"`` builds one 2n x 2n
    block exponential per edge and time sample (parallel over edges when
    ``threads`` > 1).  Both compute the same derivative; the block route
    exists as the slow reference.
    """
    if method not in ("spectral", "block"):
        raise ValueError(f"unknown gradient method {method!r}")
    u1 = _check_weights(u1, prob.graph1, "u1")
    u2 = _check_weights(u2, prob.graph2, "u2")
    L1o, L2o = laplacian(prob.graph1), laplacian(prob.graph2)
    ev = _evaluate(u1, u2, prob, L1o, L2o)
    return _gradient_from_eval(ev, prob, L1o, L2o, method, threads)


def _gradient_from_eval(ev, prob, L1o, L2o, method="spectral", threads=0):
    grads = []
    for which, g, Lo in ((1, prob.graph1, L1o), (2, prob.graph2, L2o)):
        Lt = ev.L1t if which == 1 else ev.L2t
        ei, ej = g.edge_index_arrays()
        S = 2.0 * (Lt - Lo)
        if method == "spectral":
            S = S + 2.0 * prob.alpha * _coupling_weighted_sum(ev, prob.coupling, which)
            grads.append(_edge_gather(S, ei, ej))
        else:
            grad = _edge_gather(S, ei, ej)
            grad += prob.alpha * _block_coupling_gradient(ev, prob.coupling, which, g, threads)
            grads.append(grad)
    return grads[0], grads[1]


def _block_edge_term(Lt, A_list, times, n, i, j):
    E = np.zeros((n, n))
    E[i, i] = E[j, j] = 1.0
    E[i, j] = E[j, i] = -1.0
    total = 0.0
    for A, t in zip(A_list, times):
        Hhat = expm_frechet_block(Lt, E, t)
        total += 2.0 * float(np.trace(A @ Hhat))
    return total


def _block_coupling_gradient(ev, coupling: CouplingData, which: int, g: WeightedGraph, threads=0):
    """Coupling-term gradient via one block exponential per edge and time.

    Each edge writes a disjoint gradient slot, so the result does not
    depend on scheduling when run on a thread pool.
    """
    Lt = ev.L1t if which == 1 else ev.L2t
    funcs = coupling.funcs1 if which == 1 else coupling.funcs2
    sign = 1.0 if which == 1 else -1.0
    A_list = [sign * (funcs @ R @ funcs.T) for R in ev.residuals]
    n = g.n
    grad = np.zeros(g.m)
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_block_edge_term, Lt, A_list, coupling.times, n, i, j)
                for (i, j) in g.edges
            ]
            for l, fut in enumerate(futures):
                grad[l] = fut.result()
    else:
        for l, (i, j) in enumerate(g.edges):
            grad[l] = _block_edge_term(Lt, A_list, coupling.times, n, i, j)
    return grad


def strong_coupling_residual(T, L1, L2, f, t: float) -> float:
    """||T exp(-tL1) f - exp(-tL2) T f||_2 for a known correspondence T.

    Diagnostic only: quantifies how far heat flow is from commuting with
    the correspondence, when one is available (e.g. synthetic ground
    truth).
    """
    T = np.asarray(T, dtype=float)
    f = np.asarray(f, dtype=float)
    n1 = L1.shape[0]
    n2 = L2.shape[0]
    if T.shape != (n2, n1):
        raise ValueError(f"correspondence shape {T.shape} does not match ({n2}, {n1})")
    if f.shape != (n1,):
        raise ValueError(f"function shape {f.shape} does not match ({n1},)")
    H1f = heat_kernel(eigendecompose(L1), t) @ f
    H2Tf = heat_kernel(eigendecompose(L2), t) @ (T @ f)
    return float(np.linalg.norm(T @ H1f - H2Tf))


def _bb_step(s: np.ndarray, y: np.ndarray) -> float | None:
    sy = float(s @ y)
    ss = float(s @ s)
    if sy > 0 and np.isfinite(sy) and ss > 0:
        return min(max(ss / sy, 1e-16), 1e16)
    return None


def solve_coupling(prob: CouplingProblem, config: SolverConfig | None = None) -> CouplingSolution:
    """Projected-gradient descent with Armijo backtracking on u >= 0.

    Starts from the original weights (zero distance term), projects each
    candidate onto the nonnegative orthant, and accepts steps under the
    Armijo sufficient-decrease test on the total cost.  The step length
    restarts each iteration from a Barzilai-Borwein estimate.
    """
    cfg = config or SolverConfig()
    g1, g2 = prob.graph1, prob.graph2
    L1o, L2o = laplacian(g1), laplacian(g2)
    m1 = g1.m

    u = np.concatenate([g1.weights, g2.weights])

    def evaluate(vec):
        return _evaluate(vec[:m1], vec[m1:], prob, L1o, L2o)

    def gradient(ev):
        d1, d2 = _gradient_from_eval(ev, prob, L1o, L2o, cfg.gradient_method, cfg.threads)
        return np.concatenate([d1, d2])

    ev = evaluate(u)
    trajectory = [ev.cost.total]
    grad = gradient(ev)

    def fail(msg, it):
        raise CouplingNumericalError(msg, it, u[:m1].copy(), u[m1:].copy(), np.asarray(trajectory))

    if not np.isfinite(ev.cost.total):
        fail("non-finite cost at the initial point", 0)
    if not np.all(np.isfinite(grad)):
        fail("non-finite gradient at the initial point", 0)

    converged = False
    termination = "max_iter"
    iterations = 0
    step = None
    u_prev = None
    grad_prev = None

    for it in range(1, cfg.max_iter + 1):
        pg = u - np.maximum(u - grad, 0.0)
        pg_norm = float(np.linalg.norm(pg))
        if pg_norm < cfg.gtol:
            converged = True
            termination = "projected_gradient"
            break

        if u_prev is not None:
            step = _bb_step(u - u_prev, grad - grad_prev) or step
        if step is None:
            gn = float(np.linalg.norm(grad))
            step = 1.0 / gn if gn > 0 else 1.0

        f_old = ev.cost.total
        accepted = False
        s = step
        for _ in range(cfg.max_backtracks):
            cand = np.maximum(u - s * grad, 0.0)
            delta = cand - u
            if not np.any(delta):
                break
            ev_cand = evaluate(cand)
            f_cand = ev_cand.cost.total
            if not np.isfinite(f_cand):
                s *= cfg.backtrack
                continue
            if f_cand <= f_old + cfg.armijo_c * float(grad @ delta):
                accepted = True
                break
            s *= cfg.backtrack

        if not accepted:
            # no step beyond round-off decreases the cost
            converged = True
            termination = "cost_decrease"
            break

        u_prev, grad_prev = u, grad
        u, ev, step = cand, ev_cand, s
        trajectory.append(ev.cost.total)
        iterations = it
        grad = gradient(ev)
        if not np.all(np.isfinite(grad)):
            fail(f"non-finite gradient at iteration {it}", it)

        if f_old - ev.cost.total <= cfg.tol * max(abs(f_old), 1e-300):
            converged = True
            termination = "cost_decrease"
            break

    return CouplingSolution(
        weights1=u[:m1].copy(),
        weights2=u[m1:].copy(),
        cost_trajectory=np.asarray(trajectory),
        final_distance_term=ev.cost.distance,
        final_coupling_term=ev.cost.coupling,
        alpha=prob.alpha,
        iterations=iterations,
        converged=converged,
        termination=termination,
    )
