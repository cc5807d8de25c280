import json
import os

import numpy as np
import pytest

from gbrvfl.dataset import SynthSpec, synthesize
from gbrvfl.errors import DimensionMismatch, ShapeMismatch, TargetLarger
from gbrvfl.interpret import (
    DistanceMatrix, FeatureMatrix, crop_to, dde_scores, decision_features, distance_matrices,
    feature_matrices, interpret, pairwise_distances, read_pgm, write_report,
)
from gbrvfl.models import ModelSpec, Variant, train


def double_loop_distances(X):
    n = X.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for c in range(X.shape[1]):
                s += (X[i, c] - X[j, c]) ** 2
            out[i, j] = s ** 0.5
    return out


@pytest.fixture(scope="module")
def fitted():
    d = synthesize(SynthSpec(120, 4, 2, 5.0, seed=2))
    spec = ModelSpec(Variant.GE_GB_RVFL, reg=10.0, graph_reg=0.5, hidden_nodes=15, purity=0.9, seed=1)
    return train(spec, d), d


def test_e2_limit_is_design():
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(5, 5)))
    np.testing.assert_allclose(decision_features(Q, 1e10), Q, atol=1e-8)


def test_small_design_vs_svd_oracle():
    D = np.array([[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]])
    C = 2.0
    U, s, Vt = np.linalg.svd(D.T, full_matrices=False)
    pinv_oracle = Vt.T @ np.diag(1 / s) @ U.T
    oracle = pinv_oracle @ (D.T @ D + np.eye(2) / C)
    np.testing.assert_allclose(decision_features(D, C), oracle, rtol=1e-10, atol=1e-12)


def test_graph_term_shape_check():
    with pytest.raises(DimensionMismatch):
        decision_features(np.ones((3, 2)), 1.0, np.eye(3), 1.0)


def test_alpha_zero_e1_equals_e2(fitted):
    m, d = fitted
    m0 = train(ModelSpec(**{**m.spec.to_dict(), "graph_reg": 0.0}), d)
    mats = feature_matrices(m0, d)
    assert np.abs(mats["E1"].data - mats["E2"].data).max() <= 1e-12
    rep, _, _ = interpret(m0, d)
    assert rep.dde1 == rep.dde2


def test_shapes(fitted):
    m, d = fitted
    mats = feature_matrices(m, d)
    k = m.gb_summary["k"]
    P, g, M = 4, 15, d.n_samples
    assert mats["E1"].data.shape == (k, P + g)
    assert mats["E3"].data.shape == (k, P)
    assert mats["E4"].data.shape == (M, P + g)
    assert mats["E5"].data.shape == (M, g)
    assert mats["E6"].data.shape == (M, P)
    assert all(np.all(np.isfinite(e.data)) for e in mats.values())


def test_crop():
    A = FeatureMatrix("E1", np.arange(30.0).reshape(5, 6))
    assert np.array_equal(crop_to(A, 5, 6).data, A.data)
    assert np.array_equal(crop_to(A, 2, 3).data, A.data[:2, :3])
    assert np.array_equal(crop_to(crop_to(A, 4, 5), 2, 3).data, crop_to(A, 2, 3).data)
    with pytest.raises(TargetLarger):
        crop_to(A, 6, 1)


@pytest.mark.parametrize("seed", range(10))
def test_distances_vs_double_loop(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(int(rng.integers(1, 12)), int(rng.integers(1, 6))))
    np.testing.assert_allclose(pairwise_distances(X).data, double_loop_distances(X), rtol=0, atol=1e-12)


def test_distance_examples():
    assert np.all(pairwise_distances(np.ones((4, 3))).data == 0)
    assert pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]])).data[0, 1] == 5.0


def test_dde_examples():
    A = np.random.default_rng(1).normal(size=(4, 4))
    same = {f"DE{i}": DistanceMatrix(A) for i in range(1, 7)}
    rep = dde_scores(same)
    assert (rep.dde1, rep.dde2, rep.dde4, rep.dde5) == (0.0, 0.0, 0.0, 0.0)
    de = dict(same)
    de["DE1"] = DistanceMatrix(np.array([[0.0, 3.0], [4.0, 0.0]]))
    de["DE3"] = DistanceMatrix(np.zeros((2, 2)))
    de["DE2"] = DistanceMatrix(np.zeros((2, 2)))
    assert dde_scores(de).dde1 == 5.0
    de["DE2"] = DistanceMatrix(np.zeros((3, 3)))
    with pytest.raises(ShapeMismatch):
        dde_scores(de)


def test_distance_matrices_properties(fitted):
    m, d = fitted
    des = distance_matrices(feature_matrices(m, d))
    for name in ("DE1", "DE2", "DE3", "DE4", "DE5", "DE6"):
        D = des[name].data
        assert np.array_equal(D, D.T) and np.all(np.diag(D) == 0) and D.min() >= 0


def test_self_comparison_zero(fitted):
    m, d = fitted
    mats = feature_matrices(m, d)
    des = distance_matrices(mats)
    de = {**des, "DE1": des["DE3"], "DE2": des["DE3"], "DE4": des["DE6"], "DE5": des["DE6"]}
    rep = dde_scores(de)
    assert (rep.dde1, rep.dde2, rep.dde4, rep.dde5) == (0.0, 0.0, 0.0, 0.0)


def test_hidden_narrower_than_inputs():
    d = synthesize(SynthSpec(60, 6, 1, 5.0, seed=0))
    m = train(ModelSpec(Variant.GB_RVFL, hidden_nodes=3, purity=0.9), d)
    rep, _, des = interpret(m, d)
    assert des["DE5"].data.shape == (60, 60) and rep.dde5 >= 0


def test_report_files(tmp_path, fitted):
    m, d = fitted
    rep, _, des = interpret(m, d)
    doc = write_report(str(tmp_path), m, d, rep, des)
    on_disk = json.loads((tmp_path / "interpret_report.json").read_text())
    assert on_disk == doc
    assert set(doc) == {"report_version", "variant", "reg", "graph_reg", "n_samples", "n_balls",
                        "dde", "ordering", "shapes"}
    assert set(doc["dde"]) == {"dde1", "dde2", "dde4", "dde5"}
    assert sorted(doc["ordering"]) == sorted(doc["dde"])
    for i in range(1, 7):
        csv_mat = np.loadtxt(tmp_path / f"DE{i}.csv", delimiter=",", ndmin=2)
        np.testing.assert_array_equal(csv_mat, des[f"DE{i}"].data)
        img, maxval = read_pgm(os.path.join(tmp_path, f"DE{i}.pgm"))
        assert img.shape == csv_mat.shape and maxval == 255
        assert img.max() == 255 and img.min() == 0
