"""Classification metrics, cross-validated grid search and rank statistics
(average ranks, Friedman chi-square / F, Nemenyi critical difference)."""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .dataset import Dataset, fit_norm_stats
from .errors import InvalidArgument, LengthMismatch, RaggedRows, TooFewSamples
from .granular import generate
from .models import ModelSpec, Variant, accuracy, train

UNDEFINED = "undefined"

# Two-tailed Nemenyi critical values q_alpha (studentized range / sqrt(2),
# infinite df) for 2..10 models, alpha = 0.05 and 0.10.
NEMENYI_Q = {
    0.05: {2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850, 7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164},
    0.10: {2: 1.645, 3: 2.052, 4: 2.291, 5: 2.459, 6: 2.589, 7: 2.693, 8: 2.780, 9: 2.855, 10: 2.920},
}

REG_GRID = tuple(10.0 ** e for e in range(-5, 6))
HIDDEN_GRID = tuple(range(3, 204, 20))
ACTIVATION_GRID = tuple(range(1, 11))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    """Ratios are ``None`` when their denominator is zero."""

    accuracy: float
    sensitivity: Optional[float]
    specificity: Optional[float]
    precision: Optional[float]
    counts: ConfusionCounts

    def to_dict(self) -> dict:
        out = {}
        for name in ("accuracy", "sensitivity", "specificity", "precision"):
            v = getattr(self, name)
            out[name] = UNDEFINED if v is None else v
        out["confusion"] = {"tp": self.counts.tp, "fp": self.counts.fp,
                            "tn": self.counts.tn, "fn": self.counts.fn}
        return out


def confusion(pred_labels, true_labels, positive_class: int = 1) -> ConfusionCounts:
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape:
        raise LengthMismatch(f"{pred.size} predictions for {true.size} labels")
    if pred.size == 0:
        raise LengthMismatch("no samples to evaluate")
    pp, tp_ = pred == positive_class, true == positive_class
    return ConfusionCounts(int(np.sum(pp & tp_)), int(np.sum(pp & ~tp_)),
                           int(np.sum(~pp & ~tp_)), int(np.sum(~pp & tp_)))


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def metrics_from_counts(c: ConfusionCounts) -> Metrics:
    return Metrics((c.tp + c.tn) / c.total, _ratio(c.tp, c.tp + c.fn), _ratio(c.tn, c.tn + c.fp),
                   _ratio(c.tp, c.tp + c.fp), c)


def metrics(pred_labels, true_labels, positive_class: int = 1) -> Metrics:
    c = confusion(pred_labels, true_labels, positive_class)
    m = metrics_from_counts(c)
    # multi-class accuracy is not captured by one-vs-rest counts
    acc = float(np.mean(np.asarray(pred_labels) == np.asarray(true_labels)))
    return replace(m, accuracy=acc)


def stratified_folds(labels, folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per sample: seeded shuffle, then round-robin within each class."""
    labels = np.asarray(labels)
    if folds < 2:
        raise InvalidArgument("need at least 2 folds")
    if labels.size < folds:
        raise TooFewSamples(f"{labels.size} samples cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    order = rng.permutation(labels.size)
    order = order[np.argsort(labels[order], kind="stable")]
    fold = np.empty(labels.size, dtype=np.int64)
    fold[order] = np.arange(labels.size) % folds
    return fold


@dataclass(frozen=True)
class CVResult:
    best: ModelSpec
    best_index: int
    table: list  # one dict per grid point: spec fields + fold accuracies + mean

    def write_csv(self, path) -> None:
        keys = list(self.table[0].keys())
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            w.writerows(self.table)


def _tie_key(spec: ModelSpec):
    return (spec.reg, spec.hidden_nodes, spec.graph_reg, spec.activation)


def cross_validate(grid: Sequence[ModelSpec], train_set: Dataset, folds: int = 5, seed: int = 0,
                   n_jobs: int = 1) -> CVResult:
    """Pick the grid point with the highest mean fold accuracy.

    Ties go to smaller ``reg``, then ``hidden_nodes``, ``graph_reg`` and
    ``activation``. Balls are generated once per fold and reused by every
    grid point that shares purity, seed, min_balls and normalization.
    """
    grid = list(grid)
    if not grid:
        raise InvalidArgument("empty grid")
    fold_of = stratified_folds(train_set.labels, folds, seed)
    splits = [(np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(folds)]
    gb_cache: dict = {}

    def balls(spec, f, tr):
        key = (f, spec.purity, spec.seed, spec.min_balls, spec.normalization)
        if key not in gb_cache:
            stats_ = fit_norm_stats(tr.features, spec.normalization)
            gb_cache[key] = generate(tr.with_features(stats_.apply(tr.features)),
                                     spec.purity, spec.seed, spec.min_balls)
        return gb_cache[key]

    def evaluate(i):
        spec = grid[i]
        accs = []
        for f, (tr_idx, va_idx) in enumerate(splits):
            tr, va = train_set.subset(tr_idx), train_set.subset(va_idx)
            gb = balls(spec, f, tr) if spec.variant.granular else None
            accs.append(accuracy(train(spec, tr, gbset=gb), va))
        return accs

    # fill the ball cache serially so worker threads only read it
    distinct = {(s.purity, s.seed, s.min_balls, s.normalization): s for s in grid if s.variant.granular}
    for s in distinct.values():
        for f, (tr_idx, _) in enumerate(splits):
            balls(s, f, train_set.subset(tr_idx))

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as ex:
            results = list(ex.map(evaluate, range(len(grid))))
    else:
        results = [evaluate(i) for i in range(len(grid))]

    table = []
    for spec, accs in zip(grid, results):
        row = spec.to_dict()
        row.update({f"fold{f}": a for f, a in enumerate(accs)})
        row["mean_accuracy"] = float(np.mean(accs))
        table.append(row)
    best = min(range(len(grid)), key=lambda i: (-table[i]["mean_accuracy"], _tie_key(grid[i]), i))
    return CVResult(grid[best], best, table)


def spec_grid(base: ModelSpec, regs: Iterable[float] = REG_GRID, hidden: Iterable[int] = HIDDEN_GRID,
              activations: Iterable[int] = ACTIVATION_GRID,
              graph_regs: Optional[Iterable[float]] = None) -> list[ModelSpec]:
    """Cartesian grid around ``base``; graph_reg varies only for GE-GB-RVFL."""
    if graph_regs is None:
        graph_regs = REG_GRID if base.variant is Variant.GE_GB_RVFL else (base.graph_reg,)
    if base.variant is not Variant.GE_GB_RVFL:
        graph_regs = (base.graph_reg,)
    return [replace(base, reg=c, hidden_nodes=g, activation=a, graph_reg=al)
            for c, g, a, al in itertools.product(regs, hidden, activations, graph_regs)]


@dataclass(frozen=True)
class RankTable:
    models: tuple
    datasets: Optional[tuple]
    accuracies: Optional[np.ndarray]   # models x datasets
    ranks: Optional[np.ndarray]        # models x datasets
    average_ranks: np.ndarray
    n_datasets: int

    @classmethod
    def from_average_ranks(cls, models, average_ranks, n_datasets: int) -> "RankTable":
        r = np.asarray(average_ranks, dtype=np.float64)
        if len(models) != r.size:
            raise LengthMismatch("one average rank per model")
        return cls(tuple(models), None, None, None, r, int(n_datasets))

    def to_dict(self) -> dict:
        return {
            "models": list(self.models),
            "datasets": None if self.datasets is None else list(self.datasets),
            "accuracies": None if self.accuracies is None else self.accuracies.tolist(),
            "ranks": None if self.ranks is None else self.ranks.tolist(),
            "average_ranks": self.average_ranks.tolist(),
            "n_datasets": self.n_datasets,
        }


def rank_table(acc, models: Optional[Sequence[str]] = None, datasets: Optional[Sequence[str]] = None) -> RankTable:
    """Per-dataset midranks, rank 1 for the highest accuracy."""
    A = np.asarray(acc, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidArgument("accuracy matrix must be models x datasets")
    if not np.all(np.isfinite(A)):
        raise InvalidArgument("accuracy matrix has missing cells")
    n_models, n_data = A.shape
    models = tuple(models) if models is not None else tuple(f"model{i}" for i in range(n_models))
    datasets = tuple(datasets) if datasets is not None else tuple(f"dataset{j}" for j in range(n_data))
    if len(models) != n_models or len(datasets) != n_data:
        raise LengthMismatch("names do not match the accuracy matrix shape")
    R = np.column_stack([stats.rankdata(-A[:, j], method="average") for j in range(n_data)])
    return RankTable(models, datasets, A, R, R.mean(axis=1), n_data)


@dataclass(frozen=True)
class FriedmanResult:
    chi2: float
    f_stat: float
    dof: tuple
    f_critical: float
    alpha: float
    reject_null: bool

    def to_dict(self) -> dict:
        return {"chi2": self.chi2, "f_stat": self.f_stat, "dof": list(self.dof),
                "f_critical": self.f_critical, "alpha": self.alpha, "reject_null": self.reject_null}


def friedman(rt: RankTable, alpha: float = 0.05, f_critical: Optional[float] = None) -> FriedmanResult:
    """Friedman chi-square on average ranks and the Iman-Davenport F form.

    ``f_critical`` defaults to the F(M-1, (D-1)(M-1)) quantile at ``1 - alpha``.
    """
    R = rt.average_ranks
    M, D = R.size, rt.n_datasets
    if M < 3:
        raise InvalidArgument(f"Friedman test needs at least 3 models, got {M}")
    if D < 2:
        raise InvalidArgument(f"Friedman test needs at least 2 datasets, got {D}")
    chi2 = 12.0 * D / (M * (M + 1)) * (float(np.sum(R ** 2)) - M * (M + 1) ** 2 / 4.0)
    denom = D * (M - 1) - chi2
    f_stat = math.inf if denom <= 0 else chi2 * (D - 1) / denom
    dof = (M - 1, (D - 1) * (M - 1))
    if f_critical is None:
        f_critical = float(stats.f.ppf(1.0 - alpha, *dof))
    return FriedmanResult(chi2, f_stat, dof, f_critical, alpha, bool(f_stat > f_critical))


@dataclass(frozen=True)
class NemenyiResult:
    critical_difference: float
    q_alpha: float
    rank_differences: np.ndarray
    significant: np.ndarray

    def to_dict(self, models=None) -> dict:
        return {"critical_difference": self.critical_difference, "q_alpha": self.q_alpha,
                "models": None if models is None else list(models),
                "rank_differences": self.rank_differences.tolist(),
                "significant": self.significant.tolist()}


def nemenyi_q(n_models: int, alpha: float = 0.10) -> float:
    try:
        return NEMENYI_Q[alpha][n_models]
    except KeyError:
        raise InvalidArgument(f"no tabulated q for alpha={alpha}, {n_models} models") from None


def critical_difference(q_alpha: float, n_models: int, n_datasets: int) -> float:
    return q_alpha * math.sqrt(n_models * (n_models + 1) / (6.0 * n_datasets))


def nemenyi(rt: RankTable, q_alpha: float) -> NemenyiResult:
    """Pair (i, j) is significant when ``|R_i - R_j| >= CD``."""
    if not q_alpha > 0:
        raise InvalidArgument("q_alpha must be positive")
    R = rt.average_ranks
    cd = critical_difference(q_alpha, R.size, rt.n_datasets)
    diff = np.abs(R[:, None] - R[None, :])
    sig = diff >= cd
    np.fill_diagonal(sig, False)
    return NemenyiResult(cd, q_alpha, diff, sig)


def read_accuracy_csv(path) -> RankTable:
    """Read a ``dataset,<model>,<model>,...`` table (one row per dataset)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise InvalidArgument(f"{path}: need a header and at least one dataset row")
    header, body = rows[0], rows[1:]
    models = [h.strip() for h in header[1:]]
    for r in body:
        if len(r) != len(header):
            raise RaggedRows(f"{path}: row {r[0]!r} has {len(r)} cells, expected {len(header)}")
    try:
        A = np.array([[float(c) for c in r[1:]] for r in body]).T
    except ValueError as exc:
        raise InvalidArgument(f"{path}: non-numeric accuracy ({exc})") from None
    return rank_table(A, models, [r[0].strip() for r in body])


def write_accuracy_csv(rt: RankTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", *rt.models])
        for j, name in enumerate(rt.datasets):
            w.writerow([name, *(repr(float(v)) for v in rt.accuracies[:, j])])
