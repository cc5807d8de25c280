"""Closed-form regularized least squares.

All solvers minimise ``C/2 ||D W - T||^2 + 1/2 ||W||^2`` (plus
``alpha/2 tr(W' U W)`` for the graph form) and factorize the SPD system with
Cholesky instead of forming an inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, InvalidArgument, NumericalFailure

PRIMAL = "primal"
DUAL = "dual"
GRAPH = "graph"


@dataclass(frozen=True)
class RidgeProblem:
    design: np.ndarray   # n x f
    targets: np.ndarray  # n x C
    reg: float

    def __post_init__(self):
        D = np.asarray(self.design, dtype=np.float64)
        T = np.asarray(self.targets, dtype=np.float64)
        if T.ndim == 1:
            T = T[:, None]
        if D.ndim != 2 or D.shape[0] != T.shape[0]:
            raise DimensionMismatch(f"design {D.shape} and targets {T.shape} disagree")
        if not self.reg > 0:
            raise InvalidArgument(f"regularization must be positive, got {self.reg}")
        object.__setattr__(self, "design", D)
        object.__setattr__(self, "targets", T)

    def objective(self, omega) -> float:
        r = self.design @ omega - self.targets
        return 0.5 * self.reg * float(np.sum(r * r)) + 0.5 * float(np.sum(omega * omega))


@dataclass(frozen=True)
class GraphRidgeProblem:
    base: RidgeProblem
    graph_matrix: np.ndarray  # f x f
    graph_reg: float = 0.0

    def __post_init__(self):
        U = np.asarray(self.graph_matrix, dtype=np.float64)
        f = self.base.design.shape[1]
        if U.shape != (f, f):
            raise DimensionMismatch(f"graph matrix must be {f}x{f}, got {U.shape}")
        if not np.allclose(U, U.T, rtol=0, atol=1e-10 * max(1.0, np.abs(U).max(initial=0.0))):
            raise InvalidArgument("graph matrix is not symmetric")
        if self.graph_reg < 0:
            raise InvalidArgument("graph regularization must be >= 0")
        object.__setattr__(self, "graph_matrix", U)

    def objective(self, omega) -> float:
        return self.base.objective(omega) + 0.5 * self.graph_reg * float(np.sum(omega * (self.graph_matrix @ omega)))


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalFailure("non-finite entries in solver input")


def _spd_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalFailure(f"system is not positive definite: {exc}") from None
    return linalg.cho_solve(factor, B, check_finite=False)


def _ridge_gram(D: np.ndarray, reg: float) -> np.ndarray:
    A = D.T @ D
    A[np.diag_indices_from(A)] += 1.0 / reg
    return A


def solve_primal(p: RidgeProblem) -> np.ndarray:
    """``(D'D + I/C)^-1 D'T``, the feature-space form."""
    D, T = p.design, p.targets
    _check_finite(D, T)
    return _spd_solve(_ridge_gram(D, p.reg), D.T @ T)


def solve_dual(p: RidgeProblem) -> np.ndarray:
    """``D' (I/C + DD')^-1 T``, the sample-space form."""
    D, T = p.design, p.targets
    _check_finite(D, T)
    K = D @ D.T
    K[np.diag_indices_from(K)] += 1.0 / p.reg
    return D.T @ _spd_solve(K, T)


def solve_auto(p: RidgeProblem) -> tuple[np.ndarray, str]:
    """Primal when features <= samples, dual otherwise. Returns ``(omega, branch)``."""
    n, f = p.design.shape
    if f <= n:
        return solve_primal(p), PRIMAL
    return solve_dual(p), DUAL


def solve_graph(p: GraphRidgeProblem) -> np.ndarray:
    """``(D'D + I/C + (alpha/C) U)^-1 D'T``.

    With ``alpha == 0`` this runs exactly the primal computation.
    """
    D, T = p.base.design, p.base.targets
    _check_finite(D, T, p.graph_matrix)
    A = _ridge_gram(D, p.base.reg)
    if p.graph_reg != 0.0:
        A += (p.graph_reg / p.base.reg) * p.graph_matrix
    return _spd_solve(A, D.T @ T)


def pinv(A, rcond=None) -> np.ndarray:
    """Moore-Penrose inverse via SVD.

    Singular values below ``max(n, f) * eps * sigma_max`` (or ``rcond *
    sigma_max`` when given) are treated as zero.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0:
        return np.zeros(A.shape[::-1])
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if rcond is None:
        rcond = max(A.shape) * np.finfo(np.float64).eps
    smax = s[0] if s.size else 0.0
    keep = s > rcond * smax
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T


def pseudo_inverse_solve(design, targets, rcond=None) -> np.ndarray:
    """Minimum-norm least-squares solution ``pinv(D) T``."""
    D = np.asarray(design, dtype=np.float64)
    T = np.asarray(targets, dtype=np.float64)
    return pinv(D, rcond) @ T
