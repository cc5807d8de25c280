import csv
import json
import os

import numpy as np
import pytest

from gbrvfl.cli import NOISE_COLUMNS, SCALE_COLUMNS, main, scale_bench, scale_summary
from gbrvfl.dataset import NOISE_RATES, SynthSpec, save_csv, synthesize
from gbrvfl.errors import InvalidArgument
from gbrvfl.granular import EXPORT_COLUMNS

DATA = os.path.join(os.path.dirname(__file__), "data")
PUBLISHED_RANKS = "4.98,5.13,4.65,4.37,5.18,5.32,3.57,2.8"


@pytest.fixture(scope="module")
def blob_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "blobs.csv"
    save_csv(synthesize(SynthSpec(300, 6, 1, 8.0, seed=4)), str(path))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_train(tmp_path, blob_csv):
    assert run("train", "--data", blob_csv, "--out", tmp_path, "--hidden", 20) == 0
    m = read_json(tmp_path / "metrics.json")
    assert m["test"]["accuracy"] >= 0.95
    assert set(m["test"]) >= {"accuracy", "sensitivity", "specificity", "precision"}
    assert (tmp_path / "model.json").exists()
    cfg = read_json(tmp_path / "config.json")
    assert cfg["command"] == "train" and cfg["hidden"] == 20


def test_train_deterministic(tmp_path, blob_csv):
    for sub in ("a", "b"):
        assert run("train", "--data", blob_csv, "--out", tmp_path / sub, "--variant", "GE_GB_RVFL",
                   "--graph-reg", 0.1, "--seed", 3) == 0
    assert (tmp_path / "a" / "metrics.json").read_bytes() == (tmp_path / "b" / "metrics.json").read_bytes()
    assert (tmp_path / "a" / "model.json").read_bytes() == (tmp_path / "b" / "model.json").read_bytes()


def test_missing_file(tmp_path, capsys):
    assert run("train", "--data", tmp_path / "nope.csv", "--out", tmp_path) == 1
    err = read_json(tmp_path / "error.json")
    assert err["kind"] == "MissingFile"
    assert "MissingFile" in capsys.readouterr().err


def test_usage_error(tmp_path):
    with pytest.raises(SystemExit) as ei:
        run("train", "--activation", 42, "--out", tmp_path)
    assert ei.value.code == 2


def test_config_file_defaults_and_override(tmp_path, blob_csv):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"data": blob_csv, "hidden": 7, "reg": 100.0}))
    assert run("train", "--config", cfg, "--reg", 0.5, "--out", tmp_path / "o") == 0
    resolved = read_json(tmp_path / "o" / "config.json")
    assert resolved["hidden"] == 7 and resolved["reg"] == 0.5


def test_gridsearch(tmp_path, blob_csv):
    assert run("gridsearch", "--data", blob_csv, "--out", tmp_path, "--reg-grid", "0.01,1,100",
               "--hidden-grid", "5,25", "--folds", 3) == 0
    rows = read_rows(tmp_path / "cv_table.csv")
    assert len(rows) == 6
    best = read_json(tmp_path / "best_spec.json")
    assert best["reg"] in (0.01, 1.0, 100.0)
    m = read_json(tmp_path / "metrics.json")
    assert m["grid_size"] == 6 and 0 <= m["best_index"] < 6


def test_gridsearch_single_point(tmp_path, blob_csv):
    assert run("gridsearch", "--data", blob_csv, "--out", tmp_path, "--reg", 3.0, "--hidden", 9,
               "--folds", 3) == 0
    best = read_json(tmp_path / "best_spec.json")
    assert (best["reg"], best["hidden_nodes"]) == (3.0, 9)


def test_noise_sweep(tmp_path, blob_csv):
    variants = "RVFL,GB_RVFL"
    assert run("noise-sweep", "--data", blob_csv, "--out", tmp_path, "--variants", variants,
               "--hidden", 20) == 0
    rows = read_rows(tmp_path / "noise_sweep.csv")
    assert tuple(rows[0]) == NOISE_COLUMNS
    assert len(rows) == 2 * len(NOISE_RATES)
    assert sorted({float(r["rate"]) for r in rows}) == sorted(NOISE_RATES)
    n_train = 210
    for r in rows:
        assert int(r["n_flipped"]) == int(np.floor(float(r["rate"]) * n_train + 0.5))
    # rate-0 rows are the plain train run
    run("train", "--data", blob_csv, "--out", tmp_path / "t", "--variant", "GB_RVFL", "--hidden", 20)
    clean = read_json(tmp_path / "t" / "metrics.json")["test"]["accuracy"]
    r0 = [r for r in rows if r["variant"] == "GB_RVFL" and float(r["rate"]) == 0.0][0]
    assert float(r0["accuracy"]) == clean
    rep = read_json(tmp_path / "robustness_report.json")
    assert set(rep["variants"]) == {"RVFL", "GB_RVFL"}


def test_compare_from_ranks(tmp_path, capsys):
    assert run("compare", "--ranks", PUBLISHED_RANKS, "--n-datasets", 30, "--out", tmp_path,
               "--q-alpha", 2.780) == 0
    rep = read_json(tmp_path / "compare_report.json")
    assert rep["friedman"]["chi2"] == pytest.approx(27.78, abs=0.05)
    assert rep["nemenyi"]["critical_difference"] == pytest.approx(1.76, abs=0.01)


def test_compare_default_q_lookup(tmp_path):
    assert run("compare", "--ranks", PUBLISHED_RANKS, "--n-datasets", 30, "--out", tmp_path) == 0
    assert read_json(tmp_path / "compare_report.json")["nemenyi"]["q_alpha"] == 2.780


def test_compare_accuracy_table(tmp_path):
    assert run("compare", "--acc", os.path.join(DATA, "benchmark_accuracy.csv"), "--out", tmp_path) == 0
    ranks = read_rows(tmp_path / "ranks.csv")
    assert len(ranks) == 30
    for r in ranks:
        assert sum(float(v) for k, v in r.items() if k != "dataset") == pytest.approx(36.0)
    rep = read_json(tmp_path / "compare_report.json")
    assert rep["friedman"]["reject_null"]
    assert len(read_rows(tmp_path / "accuracy_matrix.csv")) == 30


def test_compare_two_models_rejected(tmp_path):
    p = tmp_path / "two.csv"
    p.write_text("dataset,a,b\nx,0.9,0.8\ny,0.7,0.75\n")
    assert run("compare", "--acc", p, "--out", tmp_path) == 1
    assert read_json(tmp_path / "error.json")["kind"] == "InvalidArgument"


def test_compare_ties(tmp_path):
    p = tmp_path / "ties.csv"
    p.write_text("dataset,a,b,c\nx,0.9,0.9,0.8\ny,0.7,0.7,0.7\nz,0.1,0.2,0.3\n")
    assert run("compare", "--acc", p, "--out", tmp_path) == 0
    rows = read_rows(tmp_path / "ranks.csv")
    assert [float(rows[0][m]) for m in "abc"] == [1.5, 1.5, 3.0]
    assert [float(rows[1][m]) for m in "abc"] == [2.0, 2.0, 2.0]


def test_gb_export(tmp_path, blob_csv):
    assert run("gb-export", "--data", blob_csv, "--out", tmp_path, "--purity", 1.0) == 0
    snaps = read_rows(tmp_path / "gb_snapshots.csv")
    by_iter = {}
    for r in snaps:
        by_iter.setdefault(int(r["iteration"]), []).append(r)
    iters = sorted(by_iter)
    assert len(by_iter[0]) == 1
    counts = [len(by_iter[i]) for i in iters]
    assert counts == sorted(counts)
    final = read_rows(tmp_path / "gb_final.csv")
    assert list(final[0])[-len(EXPORT_COLUMNS):] == list(EXPORT_COLUMNS)
    assert all(float(r["purity"]) >= 1.0 or r["unsplittable"] == "1" for r in final)
    assert sum(int(r["member_count"]) for r in final) == 300
    assert read_json(tmp_path / "gb_summary.json")["k"] == len(final)


def test_interpret(tmp_path, blob_csv):
    assert run("train", "--data", blob_csv, "--out", tmp_path / "m", "--variant", "GE_GB_RVFL",
               "--graph-reg", 0.0, "--hidden", 10, "--purity", 0.95) == 0
    assert run("interpret", "--data", blob_csv, "--model", tmp_path / "m" / "model.json",
               "--out", tmp_path / "i") == 0
    rep = read_json(tmp_path / "i" / "interpret_report.json")
    assert rep["dde"]["dde1"] == rep["dde"]["dde2"]
    assert rep["n_samples"] == 210
    for i in range(1, 7):
        assert (tmp_path / "i" / f"DE{i}.csv").exists() and (tmp_path / "i" / f"DE{i}.pgm").exists()


def test_interpret_bad_model(tmp_path, blob_csv):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("interpret", "--data", blob_csv, "--model", bad, "--out", tmp_path) == 1
    assert read_json(tmp_path / "error.json")["kind"] == "CorruptFile"


def test_synth(tmp_path):
    assert run("synth", "--n", 100, "--features", 3, "--out", tmp_path) == 0
    rows = (tmp_path / "synth.csv").read_text().strip().splitlines()
    assert len(rows) == 101 and rows[0].count(",") == 3


def test_scale_bench_small(tmp_path):
    assert run("scale-bench", "--sizes", "2000,4000", "--clusters-per-class", "20,5", "--hidden", 50,
               "--repeats", 1, "--out", tmp_path) == 0
    rows = read_rows(tmp_path / "scale_bench.csv")
    assert tuple(rows[0]) == SCALE_COLUMNS
    assert all(int(r["k"]) < int(r["n_samples"]) for r in rows)
    assert set(read_json(tmp_path / "scale_summary.json")) >= {"speedup_at_largest",
                                                               "spearman_k_vs_gb_solve"}


def test_scale_bench_cluster_count_mismatch():
    with pytest.raises(InvalidArgument):
        scale_bench([1000, 2000], clusters=[1, 2, 3])


def test_scale_summary_math():
    rows = [{"k": k, "n_samples": n, "gb_solve_time_s": t, "rvfl_solve_time_s": 1.0}
            for k, n, t in [(10, 100, 0.1), (30, 200, 0.3), (20, 300, 0.2)]]
    s = scale_summary(rows)
    assert s["spearman_k_vs_gb_solve"] == pytest.approx(1.0)
    assert s["spearman_m_vs_gb_solve"] == pytest.approx(0.5)
    assert s["speedup_at_largest"] == pytest.approx(5.0)
