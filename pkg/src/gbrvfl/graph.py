"""LDA intrinsic/penalty graphs over ball rows and the embedding matrix U."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidArgument, NumericalFailure
from .solver import pinv

INTRINSIC = "intrinsic_only"
INTRINSIC_AND_PENALTY = "intrinsic_and_penalty"
MODES = (INTRINSIC, INTRINSIC_AND_PENALTY)
EIG_CLIP = -1e-8


@dataclass(frozen=True)
class GraphWeights:
    intrinsic: np.ndarray
    penalty: np.ndarray
    labels: np.ndarray
    k: int


@dataclass(frozen=True)
class EmbeddingMatrix:
    u: np.ndarray
    mode: str


def lda_weights(labels, k=None) -> GraphWeights:
    """Within-class weights ``1/G_c`` and penalty weights ``1/k - [same] / G_c``.

    ``G_c`` counts rows (balls) of class ``c``.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k is None:
        k = labels.size
    if labels.size != k:
        raise DimensionMismatch(f"{labels.size} labels for k={k}")
    if k < 2:
        raise InvalidArgument("graph needs at least two rows")
    classes, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if classes.size < 2:
        raise InvalidArgument("LDA graph needs at least two classes")
    same = inverse[:, None] == inverse[None, :]
    inv_g = 1.0 / counts[inverse]
    intrinsic = np.where(same, inv_g[:, None], 0.0)
    penalty = np.where(same, 1.0 / k - inv_g[:, None], 1.0 / k)
    return GraphWeights(intrinsic, penalty, labels, k)


def laplacian(w) -> np.ndarray:
    """``diag(row sums) - W``."""
    W = np.asarray(w, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionMismatch(f"weight matrix must be square, got {W.shape}")
    L = -W.copy()
    L[np.diag_indices_from(L)] += W.sum(axis=1)
    return L


def symmetrize(A) -> np.ndarray:
    return 0.5 * (A + A.T)


def embedding_matrix(design, gw: GraphWeights, mode: str = INTRINSIC) -> EmbeddingMatrix:
    """Graph-embedding matrix over the columns of ``design`` (k x f).

    ``intrinsic_only`` gives ``D' L_int D`` (PSD). ``intrinsic_and_penalty``
    gives ``pinv(D' L_pen D) D' L_int D``, symmetrized, with eigenvalues
    below -1e-8 clipped to zero so the graph solve stays positive definite.
    """
    D = np.asarray(design, dtype=np.float64)
    if D.shape[0] != gw.k:
        raise DimensionMismatch(f"design has {D.shape[0]} rows, graph has {gw.k}")
    u_int = symmetrize(D.T @ laplacian(gw.intrinsic) @ D)
    if mode == INTRINSIC:
        return EmbeddingMatrix(u_int, mode)
    if mode != INTRINSIC_AND_PENALTY:
        raise InvalidArgument(f"unknown graph mode {mode!r}")
    u_pen = symmetrize(D.T @ laplacian(gw.penalty) @ D)
    try:
        U = symmetrize(pinv(u_pen) @ u_int)
        evals, evecs = np.linalg.eigh(U)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"penalty-graph pseudo-inverse failed: {exc}") from None
    evals = np.where(evals < EIG_CLIP, 0.0, evals)
    return EmbeddingMatrix(symmetrize((evecs * evals) @ evecs.T), mode)
