"""Granular-ball generation by recursive 2-means splitting.

Starting from one ball holding every training sample, impure balls are
split with 2-means and their children re-queued until every ball reaches
the purity threshold. Balls that cannot be split (all points identical, or
a 2-means run that collapses to one cluster) are finalized below the
threshold and flagged.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dataset import Dataset, one_hot_labels
from .errors import DegenerateSplit, InvalidArgument

MAX_ITER = 100


def purity(labels) -> tuple[float, int]:
    """Return ``(purity, majority)``; ties go to the smallest class index."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise InvalidArgument("purity of an empty ball is undefined")
    counts = np.bincount(labels)
    majority = int(np.argmax(counts))
    return counts[majority] / labels.size, majority


def two_means(points, seed=None, max_iter: int = MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Split ``points`` into two clusters with Lloyd's algorithm.

    The first center is a uniformly drawn point and the second the point
    farthest from it. Returns the row indices of the two clusters.

    Raises
    ------
    DegenerateSplit
        When all points coincide or a cluster empties.
    """
    X = np.asarray(points, dtype=np.float64)
    q = X.shape[0]
    if q < 2:
        raise DegenerateSplit("need at least two points")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    first = int(rng.integers(q))
    d0 = np.sum((X - X[first]) ** 2, axis=1)
    second = int(np.argmax(d0))
    if d0[second] == 0.0:
        raise DegenerateSplit("all points are identical")
    centers = X[[first, second]].copy()

    assign = None
    for _ in range(max_iter):
        da = np.sum((X - centers[0]) ** 2, axis=1)
        db = np.sum((X - centers[1]) ** 2, axis=1)
        new = db < da  # True -> cluster b; ties stay in a
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        nb = int(assign.sum())
        if nb == 0 or nb == q:
            raise DegenerateSplit("2-means left a cluster empty")
        centers[0] = X[~assign].mean(axis=0)
        centers[1] = X[assign].mean(axis=0)
    return np.flatnonzero(~assign), np.flatnonzero(assign)


@dataclass(frozen=True)
class GranularBall:
    center: np.ndarray
    radius: float
    label: int
    purity: float
    member_count: int
    member_indices: np.ndarray
    unsplittable: bool = False

    @classmethod
    def from_members(cls, X: np.ndarray, y: np.ndarray, indices: np.ndarray,
                     unsplittable: bool = False) -> "GranularBall":
        pts = X[indices]
        center = pts.mean(axis=0)
        radius = float(np.sqrt(np.max(np.sum((pts - center) ** 2, axis=1))))
        p, lab = purity(y[indices])
        return cls(center, radius, lab, float(p), int(indices.size), np.asarray(indices), unsplittable)


@dataclass(frozen=True)
class GBSet:
    balls: tuple
    class_count: int
    purity_threshold: float
    generation_seed: Optional[int]
    n_samples: int
    iterations: int = 0

    @property
    def k(self) -> int:
        return len(self.balls)

    @property
    def centers_matrix(self) -> np.ndarray:
        return np.vstack([b.center for b in self.balls])

    @property
    def labels(self) -> np.ndarray:
        return np.array([b.label for b in self.balls], dtype=np.int64)

    @property
    def labels_onehot(self) -> np.ndarray:
        return one_hot_labels(self.labels, self.class_count)

    @property
    def unsplittable_count(self) -> int:
        return sum(b.unsplittable for b in self.balls)

    def summary(self) -> dict:
        return {
            "k": self.k,
            "unsplittable": self.unsplittable_count,
            "iterations": self.iterations,
            "purity_threshold": self.purity_threshold,
        }


EXPORT_COLUMNS = ("radius", "label", "purity", "member_count", "unsplittable")


def ball_rows(balls) -> list[list]:
    """Flat rows ``center..., radius, label, purity, member_count, unsplittable``."""
    return [[*map(float, b.center), b.radius, b.label, b.purity, b.member_count, int(b.unsplittable)]
            for b in balls]


def generate(train: Dataset, rho: float = 1.0, seed: Optional[int] = 0,
             min_balls: Optional[int] = None,
             on_iteration: Optional[Callable[[int, list], None]] = None) -> GBSet:
    """Generate granular balls covering ``train``.

    Parameters
    ----------
    train : Dataset
    rho : float
        Purity threshold in (0.5, 1].
    seed : int
        Seeds the 2-means initializations, consumed in queue order.
    min_balls : int, optional
        Keep splitting the largest splittable ball until at least this
        many balls exist.
    on_iteration : callable, optional
        Called as ``on_iteration(i, balls)`` with the current cover (finished
        and pending balls) before round ``i`` of splitting and once more at
        the end. Round 0 is the single all-sample ball.
    """
    if not 0.5 < rho <= 1.0:
        raise InvalidArgument(f"purity threshold must lie in (0.5, 1], got {rho}")
    if train.n_samples < 1:
        raise InvalidArgument("cannot generate balls from an empty dataset")
    X, y = train.features, train.labels
    rng = np.random.default_rng(seed)

    done: list[GranularBall] = []
    pending = deque([GranularBall.from_members(X, y, np.arange(train.n_samples))])
    iteration = 0

    def run_queue():
        nonlocal pending, iteration
        # one round == one pass of Alg. 1's for-loop over Temp
        while pending:
            if on_iteration is not None:
                on_iteration(iteration, done + list(pending))
            nxt: deque = deque()
            for ball in pending:
                if ball.purity >= rho:
                    done.append(ball)
                    continue
                children = _try_split(X, y, ball, rng)
                if children is None:
                    done.append(_flag(ball))
                else:
                    nxt.extend(children)
            pending = nxt
            iteration += 1

    run_queue()
    if min_balls is not None:
        while len(done) < min_balls:
            order = sorted(range(len(done)), key=lambda j: (-done[j].member_count, j))
            for j in order:
                ball = done[j]
                if ball.member_count < 2 or ball.unsplittable:
                    continue
                children = _try_split(X, y, ball, rng)
                if children is not None:
                    del done[j]
                    pending = deque(children)
                    break
                done[j] = _flag(ball)
            else:
                break
            run_queue()
    if on_iteration is not None:
        on_iteration(iteration, list(done))
    return GBSet(tuple(done), train.class_count, rho, seed, train.n_samples, iteration)


def _try_split(X, y, ball: GranularBall, rng) -> Optional[list]:
    if ball.member_count < 2:
        return None
    idx = ball.member_indices
    try:
        a, b = two_means(X[idx], rng)
    except DegenerateSplit:
        return None
    return [GranularBall.from_members(X, y, idx[a]), GranularBall.from_members(X, y, idx[b])]


def _flag(ball: GranularBall) -> GranularBall:
    return GranularBall(ball.center, ball.radius, ball.label, ball.purity, ball.member_count,
                        ball.member_indices, True)
