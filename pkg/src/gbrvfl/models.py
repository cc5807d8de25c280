"""The five model variants: RVFL, RVFLwoDL, GB-RVFL, GB-RVFLwoDL, GE-GB-RVFL.

Direct-link variants use the design ``[inputs | hidden]``; the ``woDL``
variants use the hidden features alone. Granular-ball variants train on
ball centers with one-hot ball labels as targets instead of on samples.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from . import graph as graphmod
from .dataset import Dataset, NormStats, fit_norm_stats, one_hot
from .errors import CorruptFile, DimensionMismatch, InvalidArgument, VersionMismatch
from .granular import GBSet, generate
from .randlayer import Activation, RandomLayer, project
from .solver import GRAPH, GraphRidgeProblem, RidgeProblem, solve_auto, solve_graph

FORMAT_VERSION = "1.0"


class Variant(str, Enum):
    RVFL = "RVFL"
    RVFL_WODL = "RVFLwoDL"
    GB_RVFL = "GB_RVFL"
    GB_RVFL_WODL = "GB_RVFLwoDL"
    GE_GB_RVFL = "GE_GB_RVFL"

    @property
    def direct_link(self) -> bool:
        return self in (Variant.RVFL, Variant.GB_RVFL, Variant.GE_GB_RVFL)

    @property
    def granular(self) -> bool:
        return self in (Variant.GB_RVFL, Variant.GB_RVFL_WODL, Variant.GE_GB_RVFL)


@dataclass(frozen=True)
class ModelSpec:
    variant: Variant = Variant.GB_RVFL
    reg: float = 1.0
    graph_reg: float = 0.0
    hidden_nodes: int = 103
    activation: int = int(Activation.SIGMOID)
    purity: float = 1.0
    min_balls: Optional[int] = None
    seed: int = 0
    graph_mode: str = graphmod.INTRINSIC
    normalization: str = "zscore"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "activation", int(Activation(int(self.activation))))
        if not self.reg > 0:
            raise InvalidArgument("reg must be positive")
        if self.graph_reg < 0:
            raise InvalidArgument("graph_reg must be >= 0")
        if self.hidden_nodes < 1:
            raise InvalidArgument("hidden_nodes must be >= 1")
        if self.graph_mode not in graphmod.MODES:
            raise InvalidArgument(f"graph_mode must be one of {graphmod.MODES}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"] = self.variant.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(**d)


@dataclass(frozen=True)
class TrainingArtifacts:
    """Everything the output-weight solve consumed, for inspection."""

    inputs: np.ndarray          # normalized rows the design was built from (samples or centers)
    hidden: np.ndarray
    design: np.ndarray
    targets: np.ndarray
    gbset: Optional[GBSet] = None
    embedding: Optional[np.ndarray] = None


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    layer: RandomLayer
    output_weights: np.ndarray
    norm_stats: NormStats
    class_count: int
    solve_branch: str
    gb_summary: Optional[dict] = None
    artifacts: Optional[TrainingArtifacts] = field(default=None, compare=False, repr=False)

    @property
    def n_features(self) -> int:
        return self.layer.n_inputs

    def predict(self, inputs):
        return predict(self, inputs)


def design_matrix(variant: Variant, layer: RandomLayer, inputs) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(design, hidden)`` for already-normalized inputs."""
    V = np.asarray(inputs, dtype=np.float64)
    H = project(layer, V)
    return (np.hstack([V, H]) if variant.direct_link else H), H


def training_artifacts(spec: ModelSpec, layer: RandomLayer, X, y, class_count: int,
                       gbset: Optional[GBSet] = None) -> TrainingArtifacts:
    """Build the least-squares problem for normalized training rows ``X``."""
    if spec.variant.granular:
        if gbset is None:
            gbset = generate(Dataset(X, y, class_count), spec.purity, spec.seed, spec.min_balls)
        rows, targets = gbset.centers_matrix, gbset.labels_onehot
    else:
        rows, targets = np.asarray(X), one_hot(Dataset(X, y, class_count))
    D, H = design_matrix(spec.variant, layer, rows)

    U = None
    if spec.variant is Variant.GE_GB_RVFL and gbset.k >= 2 and np.unique(gbset.labels).size >= 2:
        gw = graphmod.lda_weights(gbset.labels)
        U = graphmod.embedding_matrix(D, gw, spec.graph_mode).u
    return TrainingArtifacts(rows, H, D, targets, gbset, U)


def train(spec: ModelSpec, train_set: Dataset, gbset: Optional[GBSet] = None,
          keep_artifacts: bool = False) -> TrainedModel:
    """Fit output weights in closed form.

    ``gbset`` may be supplied to reuse balls already generated on the
    normalized ``train_set`` with the same purity and seed.
    """
    if train_set.n_samples < 1:
        raise InvalidArgument("empty training set")
    stats = fit_norm_stats(train_set.features, spec.normalization)
    X = stats.apply(train_set.features)
    layer = RandomLayer.create(train_set.n_features, spec.hidden_nodes, spec.activation, spec.seed)
    art = training_artifacts(spec, layer, X, train_set.labels, train_set.class_count, gbset)

    problem = RidgeProblem(art.design, art.targets, spec.reg)
    if art.embedding is not None and spec.graph_reg != 0.0:
        omega = solve_graph(GraphRidgeProblem(problem, art.embedding, spec.graph_reg))
        branch = GRAPH
    else:
        # alpha = 0 collapses the graph objective to the plain ridge one
        omega, branch = solve_auto(problem)

    # C order matches what load() rebuilds, so predictions agree bitwise
    omega = np.ascontiguousarray(omega)
    summary = None
    if art.gbset is not None:
        summary = art.gbset.summary()
        if spec.variant is Variant.GE_GB_RVFL and art.embedding is None:
            summary["graph"] = "degenerate"
    return TrainedModel(spec, layer, omega, stats, train_set.class_count, branch, summary,
                        art if keep_artifacts else None)


def decision_scores(m: TrainedModel, inputs) -> np.ndarray:
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.n_features:
        raise DimensionMismatch(f"model expects {m.n_features} features, got shape {X.shape}")
    D, _ = design_matrix(m.spec.variant, m.layer, m.norm_stats.apply(X))
    return D @ m.output_weights


def predict(m: TrainedModel, inputs) -> tuple[np.ndarray, np.ndarray]:
    """Scores (n x C) and argmax labels; ties resolve to the smaller class index."""
    scores = decision_scores(m, inputs)
    return scores, np.argmax(scores, axis=1)


def accuracy(m: TrainedModel, d: Dataset) -> float:
    return float(np.mean(predict(m, d.features)[1] == d.labels))


def save(m: TrainedModel) -> bytes:
    doc = {
        "format_version": FORMAT_VERSION,
        "spec": m.spec.to_dict(),
        "seed": m.spec.seed,
        "class_count": m.class_count,
        "norm_stats": m.norm_stats.to_dict(),
        "layer": m.layer.to_dict(),
        "omega": {"rows": m.output_weights.shape[0], "cols": m.output_weights.shape[1],
                  "data": m.output_weights.ravel().tolist()},
        "solve_branch": m.solve_branch,
        "gb_summary": m.gb_summary,
    }
    return json.dumps(doc).encode("utf-8")


def load(data: bytes) -> TrainedModel:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptFile("missing format_version")
    try:
        major = int(str(doc["format_version"]).split(".")[0])
    except ValueError:
        raise CorruptFile(f"bad format_version {doc['format_version']!r}") from None
    if major != int(FORMAT_VERSION.split(".")[0]):
        raise VersionMismatch(f"model format {doc['format_version']} is not readable by {FORMAT_VERSION}")
    try:
        om = doc["omega"]
        omega = np.asarray(om["data"], dtype=np.float64).reshape(om["rows"], om["cols"])
        return TrainedModel(
            spec=ModelSpec.from_dict(doc["spec"]),
            layer=RandomLayer.from_dict(doc["layer"]),
            output_weights=omega,
            norm_stats=NormStats.from_dict(doc["norm_stats"]),
            class_count=int(doc["class_count"]),
            solve_branch=doc["solve_branch"],
            gb_summary=doc.get("gb_summary"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"malformed model file: {exc}") from None


def with_params(spec: ModelSpec, **kw) -> ModelSpec:
    return replace(spec, **kw)
