"""Decision-feature matrices E1..E6, their row-distance matrices and the
Frobenius DDE scores comparing them with the raw-feature geometry.

Every feature matrix has the form ``pinv(A') (A'A + I/C [+ (alpha/C) U])``
for some design ``A`` (rows = samples or balls):

====  =============================  ==================
E1    ball design D with graph term  k x (P+g)
E2    ball design D                  k x (P+g)
E3    ball centers                   k x P
E4    sample design [V | G]          M x (P+g)
E5    sample hidden features G       M x g
E6    raw samples V                  M x P
====  =============================  ==================

E1, E2 are cropped to E3's shape and E4, E5 to E6's before distances are
taken. Cropping keeps the top-left block; the design column order is
``[inputs | hidden]`` so the kept columns are the input-feature block.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .dataset import Dataset
from .errors import DimensionMismatch, ShapeMismatch, TargetLarger
from .granular import generate
from .models import TrainedModel, Variant, design_matrix
from .solver import pinv
from . import graph as graphmod

WHICH = ("E1", "E2", "E3", "E4", "E5", "E6")
REPORT_VERSION = "1.0"


@dataclass(frozen=True)
class FeatureMatrix:
    which: str
    data: np.ndarray


@dataclass(frozen=True)
class DistanceMatrix:
    data: np.ndarray


@dataclass(frozen=True)
class InterpretReport:
    dde1: float
    dde2: float
    dde4: float
    dde5: float

    def to_dict(self) -> dict:
        return {"dde1": self.dde1, "dde2": self.dde2, "dde4": self.dde4, "dde5": self.dde5}


def decision_features(design, reg: float, graph=None, graph_reg: float = 0.0) -> np.ndarray:
    """``pinv(D') (D'D + I/C + (alpha/C) U)``."""
    D = np.asarray(design, dtype=np.float64)
    A = D.T @ D
    A[np.diag_indices_from(A)] += 1.0 / reg
    if graph is not None and graph_reg != 0.0:
        U = np.asarray(graph, dtype=np.float64)
        if U.shape != A.shape:
            raise DimensionMismatch(f"graph matrix {U.shape} does not match design width {D.shape[1]}")
        A = A + (graph_reg / reg) * U
    return pinv(D.T) @ A


def feature_matrices(model: TrainedModel, train_set: Dataset) -> dict:
    """All six feature matrices for ``model`` and the data it was trained on.

    Balls are regenerated from the normalized training data with the
    model's purity and seed. E1 uses the model's graph term when it is a
    GE-GB-RVFL model with ``graph_reg > 0``; otherwise E1 equals E2.
    """
    spec = model.spec
    V = model.norm_stats.apply(train_set.features)
    gb = generate(train_set.with_features(V), spec.purity, spec.seed, spec.min_balls)
    O = gb.centers_matrix
    D, _ = design_matrix(Variant.GB_RVFL, model.layer, O)
    S, G = design_matrix(Variant.RVFL, model.layer, V)

    U = None
    if spec.variant is Variant.GE_GB_RVFL and spec.graph_reg != 0.0 and np.unique(gb.labels).size >= 2:
        U = graphmod.embedding_matrix(D, graphmod.lda_weights(gb.labels), spec.graph_mode).u

    C = spec.reg
    mats = {
        "E1": decision_features(D, C, U, spec.graph_reg),
        "E2": decision_features(D, C),
        "E3": decision_features(O, C),
        "E4": decision_features(S, C),
        "E5": decision_features(G, C),
        "E6": decision_features(V, C),
    }
    return {k: FeatureMatrix(k, v) for k, v in mats.items()}


def feature_matrix(model: TrainedModel, train_set: Dataset, which: str) -> FeatureMatrix:
    return feature_matrices(model, train_set)[which]


def crop_to(e: FeatureMatrix, target_rows: int, target_cols: int) -> FeatureMatrix:
    r, c = e.data.shape
    if target_rows > r or target_cols > c:
        raise TargetLarger(f"cannot crop {r}x{c} to {target_rows}x{target_cols}")
    return FeatureMatrix(e.which, e.data[:target_rows, :target_cols].copy())


def pairwise_distances(e) -> DistanceMatrix:
    """Euclidean distances between every pair of rows."""
    X = np.asarray(e.data if isinstance(e, FeatureMatrix) else e, dtype=np.float64)
    if X.shape[0] < 1:
        raise DimensionMismatch("need at least one row")
    if X.shape[0] == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    return DistanceMatrix(squareform(pdist(X, "euclidean")))


def dde_scores(de: dict) -> InterpretReport:
    """Frobenius gaps DE1, DE2 vs DE3 and DE4, DE5 vs DE6."""
    def gap(i, ref):
        a, b = np.asarray(_data(de[i])), np.asarray(_data(de[ref]))
        if a.shape != b.shape:
            raise ShapeMismatch(f"{i} {a.shape} vs {ref} {b.shape}")
        return float(np.linalg.norm(a - b, "fro"))

    return InterpretReport(gap("DE1", "DE3"), gap("DE2", "DE3"), gap("DE4", "DE6"), gap("DE5", "DE6"))


def _data(x):
    return x.data if isinstance(x, (DistanceMatrix, FeatureMatrix)) else x


def distance_matrices(mats: dict) -> dict:
    """Crop per the E3 / E6 references and compute DE1..DE6."""
    r3, c3 = mats["E3"].data.shape
    r6, c6 = mats["E6"].data.shape
    cropped = {
        "E1": crop_to(mats["E1"], r3, c3),
        "E2": crop_to(mats["E2"], r3, c3),
        "E3": mats["E3"],
        "E4": crop_to(mats["E4"], r6, c6),
        "E5": crop_to(mats["E5"], r6, min(c6, mats["E5"].data.shape[1])),
        "E6": mats["E6"],
    }
    # E5 has g columns; when g < P the reference is cropped to match instead
    if cropped["E5"].data.shape != (r6, c6):
        c = cropped["E5"].data.shape[1]
        de5 = pairwise_distances(cropped["E5"])
        de6_for5 = pairwise_distances(crop_to(mats["E6"], r6, c))
    else:
        de5 = de6_for5 = None
    out = {f"D{k}": pairwise_distances(v) for k, v in cropped.items()}
    if de5 is not None:
        out["DE5"] = de5
        out["DE6_for_E5"] = de6_for5
    return out


def interpret(model: TrainedModel, train_set: Dataset) -> tuple[InterpretReport, dict, dict]:
    mats = feature_matrices(model, train_set)
    des = distance_matrices(mats)
    rep = dde_scores(des)
    if "DE6_for_E5" in des:
        rep = InterpretReport(rep.dde1, rep.dde2, rep.dde4,
                              float(np.linalg.norm(des["DE5"].data - des["DE6_for_E5"].data, "fro")))
    return rep, mats, des


def write_pgm(matrix, path) -> None:
    """8-bit binary PGM, min-max scaled (constant matrices map to 0)."""
    A = np.asarray(matrix, dtype=np.float64)
    lo, hi = float(A.min()), float(A.max())
    scaled = np.zeros_like(A) if hi == lo else (A - lo) / (hi - lo)
    img = np.rint(scaled * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{A.shape[1]} {A.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w), maxval


def write_report(out_dir, model: TrainedModel, train_set: Dataset, report: InterpretReport,
                 des: dict) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    shapes = {}
    for name, dm in des.items():
        if not name.startswith("DE") or name == "DE6_for_E5":
            continue
        np.savetxt(os.path.join(out_dir, f"{name}.csv"), dm.data, delimiter=",", fmt="%.17g")
        write_pgm(dm.data, os.path.join(out_dir, f"{name}.pgm"))
        shapes[name] = list(dm.data.shape)
    doc = {
        "report_version": REPORT_VERSION,
        "variant": model.spec.variant.value,
        "reg": model.spec.reg,
        "graph_reg": model.spec.graph_reg,
        "n_samples": train_set.n_samples,
        "n_balls": shapes["DE3"][0],
        "dde": report.to_dict(),
        "ordering": sorted(report.to_dict(), key=lambda k: report.to_dict()[k]),
        "shapes": shapes,
    }
    with open(os.path.join(out_dir, "interpret_report.json"), "w") as fh:
        json.dump(doc, fh, indent=2)
    return doc
