import json

import numpy as np
import pytest

from gbrvfl.dataset import Dataset, SynthSpec, synthesize, train_test_split
from gbrvfl.errors import CorruptFile, DimensionMismatch, InvalidArgument, VersionMismatch
from gbrvfl.models import (
    ModelSpec, Variant, accuracy, decision_scores, load, predict, save, train, with_params,
)
from gbrvfl.solver import DUAL, GRAPH, PRIMAL


@pytest.fixture(scope="module")
def blobs():
    return synthesize(SynthSpec(400, 5, 1, 8.0, seed=3))


def alternating_line(M=60):
    """Distinct 1-D points with alternating labels: every pure ball is a singleton."""
    x = np.arange(M, dtype=np.float64)[:, None]
    return Dataset(x, np.arange(M) % 2, 2)


def test_alpha_zero_reduces_to_gb_rvfl(blobs):
    gb = train(ModelSpec(Variant.GB_RVFL, reg=10.0, hidden_nodes=40, purity=0.9, seed=2), blobs)
    ge = train(ModelSpec(Variant.GE_GB_RVFL, reg=10.0, graph_reg=0.0, hidden_nodes=40, purity=0.9,
                         seed=2), blobs)
    assert np.abs(gb.output_weights - ge.output_weights).max() <= 1e-12
    assert ge.solve_branch == gb.solve_branch


def test_singleton_balls_equal_rvfl():
    d = alternating_line()
    spec = ModelSpec(Variant.GB_RVFL, reg=5.0, hidden_nodes=20, purity=1.0, seed=1)
    gb = train(spec, d, keep_artifacts=True)
    assert gb.gb_summary["k"] == d.n_samples
    rv = train(with_params(spec, variant=Variant.RVFL), d)
    assert gb.solve_branch == rv.solve_branch
    assert np.abs(gb.output_weights - rv.output_weights).max() <= 1e-10


@pytest.mark.parametrize("variant", list(Variant))
def test_separable_training_accuracy(blobs, variant):
    spec = ModelSpec(variant, reg=100.0, graph_reg=0.1, hidden_nodes=50, purity=1.0, seed=0)
    m = train(spec, blobs)
    assert accuracy(m, blobs) >= 0.99
    f = 5 + 50 if variant.direct_link else 50
    assert m.output_weights.shape == (f, 2)
    assert (m.gb_summary is not None) == variant.granular


def test_branches(blobs):
    assert train(ModelSpec(Variant.RVFL, hidden_nodes=20), blobs).solve_branch == PRIMAL
    assert train(ModelSpec(Variant.GB_RVFL, hidden_nodes=200, purity=1.0), blobs).solve_branch == DUAL
    ge = train(ModelSpec(Variant.GE_GB_RVFL, graph_reg=1.0, hidden_nodes=20), blobs)
    assert ge.solve_branch == GRAPH


def test_ge_single_class_balls_marked_degenerate():
    d = synthesize(SynthSpec(100, 3, 1, 20.0, seed=0))
    # every ball carries class 0, so no LDA graph exists
    one = Dataset(d.features, np.zeros(100, dtype=np.int64), 2)
    m = train(ModelSpec(Variant.GE_GB_RVFL, graph_reg=1.0, hidden_nodes=10), one)
    assert m.gb_summary["graph"] == "degenerate"
    assert m.solve_branch != GRAPH


def test_huge_reg_interpolates_centers(blobs):
    m = train(ModelSpec(Variant.GB_RVFL, reg=1e8, hidden_nodes=203, purity=1.0, seed=4), blobs,
              keep_artifacts=True)
    gbset = m.artifacts.gbset
    raw_centers = m.norm_stats.invert(gbset.centers_matrix)
    _, lab = predict(m, raw_centers)
    assert np.mean(lab == gbset.labels) >= 0.95


def test_duplicated_row_identical_scores(blobs):
    m = train(ModelSpec(Variant.RVFL, hidden_nodes=30), blobs)
    s, lab = predict(m, np.repeat(blobs.features[:1], 7, axis=0))
    assert s.shape == (7, 2)
    # BLAS row blocking can move the last bit, so compare to rounding level
    assert np.abs(s - s[0]).max() <= 1e-12 and np.all(lab == lab[0])


def test_argmax_tie_goes_to_smaller_index():
    d = Dataset(np.array([[0.0], [1.0], [2.0], [3.0]]), [0, 1, 0, 1], 2)
    m = train(ModelSpec(Variant.RVFL, hidden_nodes=3), d)
    m0 = type(m)(m.spec, m.layer, np.zeros_like(m.output_weights), m.norm_stats, 2, m.solve_branch)
    assert predict(m0, d.features)[1].tolist() == [0, 0, 0, 0]


def test_predict_dimension_mismatch(blobs):
    m = train(ModelSpec(Variant.RVFL, hidden_nodes=5), blobs)
    with pytest.raises(DimensionMismatch):
        decision_scores(m, np.zeros((2, 4)))


def test_deterministic(blobs):
    spec = ModelSpec(Variant.GE_GB_RVFL, graph_reg=0.5, hidden_nodes=25, purity=0.95, seed=9)
    assert train(spec, blobs).output_weights.tobytes() == train(spec, blobs).output_weights.tobytes()


def test_save_load_round_trip(blobs):
    tr, te = train_test_split(blobs)
    for v in Variant:
        m = train(ModelSpec(v, graph_reg=0.3, hidden_nodes=17, activation=1, seed=5), tr)
        back = load(save(m))
        assert predict(back, te.features)[0].tobytes() == predict(m, te.features)[0].tobytes()
        assert back.spec == m.spec and back.gb_summary == m.gb_summary


def test_load_errors(blobs):
    data = save(train(ModelSpec(Variant.RVFL, hidden_nodes=5), blobs))
    with pytest.raises(CorruptFile):
        load(data[: len(data) // 2])
    with pytest.raises(CorruptFile):
        load(b"\xff\xfe")
    doc = json.loads(data)
    doc["format_version"] = "2.0"
    with pytest.raises(VersionMismatch):
        load(json.dumps(doc).encode())
    del doc["omega"]
    doc["format_version"] = "1.3"
    with pytest.raises(CorruptFile):
        load(json.dumps(doc).encode())


def test_spec_validation():
    with pytest.raises(InvalidArgument):
        ModelSpec(reg=0.0)
    with pytest.raises(InvalidArgument):
        ModelSpec(graph_reg=-1.0)
    with pytest.raises(ValueError):
        ModelSpec(activation=11)
    assert ModelSpec.from_dict(ModelSpec(Variant.RVFL_WODL).to_dict()).variant is Variant.RVFL_WODL
