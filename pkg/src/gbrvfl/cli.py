"""Command-line entry point: ``gbrvfl <command> [options]``.

Every command writes its resolved configuration to ``<out>/config.json``;
passing that file back through ``--config`` reproduces the run. Exit codes:
0 success, 1 domain error (``<out>/error.json`` holds ``{"kind", "message"}``),
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np
from scipy import stats as sstats

from . import evalstats, interpret as interp
from .dataset import (NOISE_RATES, NoiseSpec, SplitSpec, SynthSpec, fit_norm_stats, inject_label_noise,
                      load_csv, one_hot, save_csv, split_indices, synthesize)
from .errors import GBRVFLError, InvalidArgument, MissingFile
from .granular import EXPORT_COLUMNS, ball_rows, generate
from .graph import MODES
from .models import ModelSpec, Variant, design_matrix, load, predict, save, train
from .randlayer import RandomLayer
from .solver import RidgeProblem, solve_auto

SCHEMA_VERSION = "1.0"


# ---------------------------------------------------------------- helpers

def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dataset(args):
    if args.data:
        return load_csv(args.data, has_header=args.header, label_column=args.label_column)
    if args.synth_n:
        return synthesize(SynthSpec(args.synth_n, args.synth_features, args.synth_clusters,
                                    args.synth_separation, args.seed))
    raise MissingFile("no dataset: pass --data PATH or --synth-n N")


def _spec(args, variant=None) -> ModelSpec:
    return ModelSpec(
        variant=Variant(variant or args.variant),
        reg=args.reg,
        graph_reg=args.graph_reg,
        hidden_nodes=args.hidden,
        activation=args.activation,
        purity=args.purity,
        min_balls=args.min_balls,
        seed=args.seed,
        graph_mode=args.graph_mode,
        normalization=args.normalize,
    )


def _split(args, d):
    tr, te = split_indices(d, SplitSpec(args.train_fraction, args.seed, not args.no_stratify))
    return d.subset(tr), d.subset(te)


def _evaluate(model, test, positive_class):
    _, pred = predict(model, test.features)
    return evalstats.metrics(pred, test.labels, positive_class)


def run_train(args, spec: ModelSpec, noise_rate: float):
    """Split, optionally corrupt training labels, train, evaluate on the clean test split."""
    d = _dataset(args)
    tr, te = _split(args, d)
    n_flipped = 0
    if noise_rate > 0:
        noisy = inject_label_noise(tr, NoiseSpec(noise_rate, args.seed))
        n_flipped = int(np.sum(noisy.labels != tr.labels))
        tr = noisy
    model = train(spec, tr)
    m = _evaluate(model, te, args.positive_class)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "variant": spec.variant.value,
        "spec": spec.to_dict(),
        "n_train": tr.n_samples,
        "n_test": te.n_samples,
        "noise_rate": noise_rate,
        "n_flipped": n_flipped,
        "train_accuracy": float(np.mean(predict(model, tr.features)[1] == tr.labels)),
        "test": m.to_dict(),
        "solve_branch": model.solve_branch,
        "gb_summary": model.gb_summary,
    }
    return model, doc


# ---------------------------------------------------------------- commands

def cmd_train(args) -> int:
    model, doc = run_train(args, _spec(args), args.noise_rate)
    with open(os.path.join(args.out, "model.json"), "wb") as fh:
        fh.write(save(model))
    _write_json(os.path.join(args.out, "metrics.json"), doc)
    print(json.dumps({"accuracy": doc["test"]["accuracy"], "out": args.out}))
    return 0


def cmd_gridsearch(args) -> int:
    d = _dataset(args)
    tr, te = _split(args, d)
    base = _spec(args)
    if args.full_grid:
        grid = evalstats.spec_grid(base)
    else:
        grid = evalstats.spec_grid(
            base,
            regs=_floats(args.reg_grid) if args.reg_grid else (base.reg,),
            hidden=_ints(args.hidden_grid) if args.hidden_grid else (base.hidden_nodes,),
            activations=_ints(args.activation_grid) if args.activation_grid else (base.activation,),
            graph_regs=_floats(args.graph_reg_grid) if args.graph_reg_grid else (base.graph_reg,),
        )
    res = evalstats.cross_validate(grid, tr, folds=args.folds, seed=args.seed, n_jobs=args.jobs)
    res.write_csv(os.path.join(args.out, "cv_table.csv"))
    model = train(res.best, tr)
    m = _evaluate(model, te, args.positive_class)
    _write_json(os.path.join(args.out, "best_spec.json"), res.best.to_dict())
    _write_json(os.path.join(args.out, "metrics.json"), {
        "schema_version": SCHEMA_VERSION,
        "grid_size": len(grid),
        "folds": args.folds,
        "best_index": res.best_index,
        "best_cv_accuracy": res.table[res.best_index]["mean_accuracy"],
        "best_spec": res.best.to_dict(),
        "test": m.to_dict(),
    })
    with open(os.path.join(args.out, "model.json"), "wb") as fh:
        fh.write(save(model))
    print(json.dumps({"best": res.best.to_dict(), "test_accuracy": m.accuracy}))
    return 0


NOISE_COLUMNS = ("variant", "rate", "n_flipped", "accuracy", "sensitivity", "specificity", "precision")


def cmd_noise_sweep(args) -> int:
    variants = [Variant(v) for v in args.variants.split(",")]
    rates = _floats(args.rates)
    rows, by_variant = [], {}
    for v in variants:
        for r in rates:
            _, doc = run_train(args, _spec(args, v), r)
            t = doc["test"]
            rows.append([v.value, r, doc["n_flipped"], t["accuracy"], t["sensitivity"],
                         t["specificity"], t["precision"]])
            by_variant.setdefault(v.value, {})[r] = t["accuracy"]
    with open(os.path.join(args.out, "noise_sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NOISE_COLUMNS)
        w.writerows(rows)
    report = {"schema_version": SCHEMA_VERSION, "rates": rates, "variants": {}}
    for v, accs in by_variant.items():
        a = [accs[r] for r in rates]
        report["variants"][v] = {
            "accuracy": a,
            "mean_accuracy": float(np.mean(a)),
            "drop_clean_to_max_noise": a[0] - a[-1],
        }
    _write_json(os.path.join(args.out, "robustness_report.json"), report)
    print(json.dumps({v: r["mean_accuracy"] for v, r in report["variants"].items()}))
    return 0


def cmd_compare(args) -> int:
    if args.acc:
        if not os.path.isfile(args.acc):
            raise MissingFile(f"no such file: {args.acc}")
        rt = evalstats.read_accuracy_csv(args.acc)
    elif args.ranks:
        ranks = _floats(args.ranks)
        models = args.models.split(",") if args.models else [f"model{i}" for i in range(len(ranks))]
        rt = evalstats.RankTable.from_average_ranks(models, ranks, args.n_datasets)
    else:
        raise MissingFile("pass --acc CSV or --ranks with --n-datasets")
    q = args.q_alpha if args.q_alpha else evalstats.nemenyi_q(len(rt.models), args.nemenyi_alpha)
    fr = evalstats.friedman(rt, alpha=args.friedman_alpha)
    nm = evalstats.nemenyi(rt, q)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "rank_table": rt.to_dict(),
        "friedman": fr.to_dict(),
        "nemenyi": nm.to_dict(rt.models),
    }
    _write_json(os.path.join(args.out, "compare_report.json"), doc)
    if rt.accuracies is not None:
        evalstats.write_accuracy_csv(rt, os.path.join(args.out, "accuracy_matrix.csv"))
        with open(os.path.join(args.out, "ranks.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dataset", *rt.models])
            for j, name in enumerate(rt.datasets):
                w.writerow([name, *rt.ranks[:, j].tolist()])
    print(json.dumps({"chi2": fr.chi2, "f_stat": fr.f_stat, "critical_difference": nm.critical_difference}))
    return 0


SCALE_COLUMNS = ("n_samples", "n_features", "clusters_per_class", "hidden_nodes", "k", "unsplittable",
                 "gb_time_s", "gb_solve_time_s", "rvfl_solve_time_s", "gb_branch", "rvfl_branch")


def _best_time(fn, repeats):
    best, out = float("inf"), None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def scale_bench(sizes, n_features=32, hidden=203, purity=0.9, separation=12.0, clusters=(400, 50, 200),
                activation=3, reg=1.0, seed=0, repeats=5):
    """Time ball generation and both output-weight solves for each size.

    ``clusters`` is a clusters-per-class count shared by all sizes or one
    count per size; varying it independently of the size is what lets the
    ball count, and hence the GB solve time, move against M.
    """
    sizes = list(sizes)
    clusters = [clusters] * len(sizes) if np.isscalar(clusters) else list(clusters)
    if len(clusters) != len(sizes):
        raise InvalidArgument(f"{len(clusters)} cluster counts for {len(sizes)} sizes")
    rows = []
    layer = RandomLayer.create(n_features, hidden, activation, seed)
    for n, c in zip(sizes, clusters):
        d = synthesize(SynthSpec(n, n_features, c, separation, seed))
        stats = fit_norm_stats(d.features)
        X = stats.apply(d.features)
        d = d.with_features(X)
        t0 = time.perf_counter()
        gb = generate(d, purity, seed)
        gb_time = time.perf_counter() - t0
        D_gb, _ = design_matrix(Variant.GB_RVFL, layer, gb.centers_matrix)
        p_gb = RidgeProblem(D_gb, gb.labels_onehot, reg)
        t_gb, (_, b_gb) = _best_time(lambda: solve_auto(p_gb), repeats)
        D_full, _ = design_matrix(Variant.RVFL, layer, X)
        p_full = RidgeProblem(D_full, one_hot(d), reg)
        t_full, (_, b_full) = _best_time(lambda: solve_auto(p_full), repeats)
        del D_full, p_full
        rows.append({"n_samples": n, "n_features": n_features, "clusters_per_class": c,
                     "hidden_nodes": hidden, "k": gb.k,
                     "unsplittable": gb.unsplittable_count, "gb_time_s": gb_time,
                     "gb_solve_time_s": t_gb, "rvfl_solve_time_s": t_full,
                     "gb_branch": b_gb, "rvfl_branch": b_full})
    return rows


def scale_summary(rows) -> dict:
    k = [r["k"] for r in rows]
    M = [r["n_samples"] for r in rows]
    t = [r["gb_solve_time_s"] for r in rows]
    last = rows[-1]
    out = {
        "schema_version": SCHEMA_VERSION,
        "speedup_at_largest": last["rvfl_solve_time_s"] / last["gb_solve_time_s"],
        "largest_n_samples": last["n_samples"],
    }
    if len(rows) >= 2:
        out["spearman_k_vs_gb_solve"] = float(sstats.spearmanr(k, t)[0])
        out["spearman_m_vs_gb_solve"] = float(sstats.spearmanr(M, t)[0])
    return out


def cmd_scale_bench(args) -> int:
    clusters = _ints(args.clusters_per_class)
    rows = scale_bench(_ints(args.sizes), args.features, args.hidden, args.purity, args.separation,
                       clusters[0] if len(clusters) == 1 else clusters, args.activation, args.reg, args.seed, args.repeats)
    with open(os.path.join(args.out, "scale_bench.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SCALE_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    summary = scale_summary(rows)
    _write_json(os.path.join(args.out, "scale_summary.json"), summary)
    print(json.dumps(summary))
    return 0


def cmd_gb_export(args) -> int:
    d = _dataset(args)
    if args.normalize != "none":
        d = d.with_features(fit_norm_stats(d.features, args.normalize).apply(d.features))
    snapshots = []
    gb = generate(d, args.purity, args.seed, args.min_balls,
                  on_iteration=lambda i, balls: snapshots.append((i, ball_rows(balls))))
    centers = [f"c{j}" for j in range(d.n_features)]
    with open(os.path.join(args.out, "gb_snapshots.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "ball", *centers, *EXPORT_COLUMNS])
        for i, rows in snapshots:
            for b, row in enumerate(rows):
                w.writerow([i, b, *row])
    with open(os.path.join(args.out, "gb_final.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*centers, *EXPORT_COLUMNS])
        w.writerows(ball_rows(gb.balls))
    _write_json(os.path.join(args.out, "gb_summary.json"),
                {"schema_version": SCHEMA_VERSION, **gb.summary(), "n_samples": d.n_samples,
                 "snapshots": len(snapshots)})
    print(json.dumps(gb.summary()))
    return 0


def cmd_interpret(args) -> int:
    if not os.path.isfile(args.model):
        raise MissingFile(f"no such file: {args.model}")
    with open(args.model, "rb") as fh:
        model = load(fh.read())
    d = _dataset(args)
    tr = d if args.full_data else _split(args, d)[0]
    report, _, des = interp.interpret(model, tr)
    doc = interp.write_report(args.out, model, tr, report, des)
    print(json.dumps(doc["dde"]))
    return 0


def cmd_synth(args) -> int:
    d = synthesize(SynthSpec(args.n, args.features, args.clusters_per_class, args.separation,
                             args.seed, args.classes))
    path = args.output or os.path.join(args.out, "synth.csv")
    save_csv(d, path)
    print(json.dumps({"path": path, "n_samples": d.n_samples, "n_features": d.n_features}))
    return 0


# ---------------------------------------------------------------- parser

def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--config", help="JSON file of option defaults (e.g. a previous config.json)")


def _data_opts(p):
    p.add_argument("--data", help="CSV dataset, label in the last column by default")
    p.add_argument("--label-column", type=int, default=-1)
    p.add_argument("--header", dest="header", action="store_true", default=None)
    p.add_argument("--no-header", dest="header", action="store_false")
    p.add_argument("--synth-n", type=int, default=0, help="use a synthetic dataset of this size")
    p.add_argument("--synth-features", type=int, default=32)
    p.add_argument("--synth-clusters", type=int, default=1)
    p.add_argument("--synth-separation", type=float, default=6.0)


def _split_opts(p):
    p.add_argument("--train-fraction", type=float, default=0.70)
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--positive-class", type=int, default=1)


def _model_opts(p):
    p.add_argument("--variant", default=Variant.GB_RVFL.value, choices=[v.value for v in Variant])
    p.add_argument("--reg", type=float, default=1.0)
    p.add_argument("--graph-reg", type=float, default=0.0)
    p.add_argument("--hidden", type=int, default=103)
    p.add_argument("--activation", type=int, default=3, choices=range(1, 11))
    p.add_argument("--purity", type=float, default=1.0)
    p.add_argument("--min-balls", type=int, default=None)
    p.add_argument("--graph-mode", default=MODES[0], choices=MODES)
    p.add_argument("--normalize", default="zscore", choices=("zscore", "minmax", "none"))


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="gbrvfl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = subs["train"] = sub.add_parser("train", help="train one model and evaluate on the 30%% split")
    _common(p); _data_opts(p); _split_opts(p); _model_opts(p)
    p.add_argument("--noise-rate", type=float, default=0.0)
    p.set_defaults(func=cmd_train)

    p = subs["gridsearch"] = sub.add_parser("gridsearch", help="5-fold CV grid search, then test")
    _common(p); _data_opts(p); _split_opts(p); _model_opts(p)
    p.add_argument("--full-grid", action="store_true",
                   help="reg, graph-reg in 10^-5..10^5, hidden 3:20:203, activations 1..10")
    p.add_argument("--reg-grid")
    p.add_argument("--hidden-grid")
    p.add_argument("--activation-grid")
    p.add_argument("--graph-reg-grid")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_gridsearch)

    p = subs["noise-sweep"] = sub.add_parser("noise-sweep", help="accuracy vs training-label noise")
    _common(p); _data_opts(p); _split_opts(p); _model_opts(p)
    p.add_argument("--variants", default=",".join(v.value for v in Variant))
    p.add_argument("--rates", default=",".join(str(r) for r in NOISE_RATES))
    p.set_defaults(func=cmd_noise_sweep)

    p = subs["compare"] = sub.add_parser("compare", help="ranks, Friedman and Nemenyi tests")
    _common(p)
    p.add_argument("--acc", help="CSV: dataset,<model>,... with one accuracy row per dataset")
    p.add_argument("--ranks", help="comma-separated average ranks (instead of --acc)")
    p.add_argument("--models", help="comma-separated model names for --ranks")
    p.add_argument("--n-datasets", type=int, default=0)
    p.add_argument("--q-alpha", type=float, default=None)
    p.add_argument("--nemenyi-alpha", type=float, default=0.10, choices=(0.05, 0.10))
    p.add_argument("--friedman-alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)

    p = subs["scale-bench"] = sub.add_parser("scale-bench", help="ball count and solve-time scaling")
    _common(p)
    p.add_argument("--sizes", default="10000,50000,100000")
    p.add_argument("--features", type=int, default=32)
    p.add_argument("--hidden", type=int, default=203)
    p.add_argument("--purity", type=float, default=0.9)
    p.add_argument("--separation", type=float, default=12.0)
    p.add_argument("--clusters-per-class", default="400,50,200",
                   help="one count, or one per size")
    p.add_argument("--activation", type=int, default=3)
    p.add_argument("--reg", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=cmd_scale_bench)

    p = subs["gb-export"] = sub.add_parser("gb-export", help="per-iteration granular-ball snapshots")
    _common(p); _data_opts(p)
    p.add_argument("--purity", type=float, default=1.0)
    p.add_argument("--min-balls", type=int, default=None)
    p.add_argument("--normalize", default="none", choices=("zscore", "minmax", "none"))
    p.set_defaults(func=cmd_gb_export)

    p = subs["interpret"] = sub.add_parser("interpret", help="E1..E6 distance matrices and DDE scores")
    _common(p); _data_opts(p); _split_opts(p)
    p.add_argument("--model", required=True)
    p.add_argument("--full-data", action="store_true", help="use every row instead of the training split")
    p.set_defaults(func=cmd_interpret)

    p = subs["synth"] = sub.add_parser("synth", help="write a synthetic Gaussian-cluster CSV")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--features", type=int, default=32)
    p.add_argument("--clusters-per-class", type=int, default=1)
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--output")
    p.set_defaults(func=cmd_synth)
    return parser, subs


def _resolved_config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "config")}


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read --config {args.config}: {exc}")
        cfg.pop("command", None)
        # explicit flags still win over config values
        subs[args.command].set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)

    try:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "config.json"), _resolved_config(args))
        return args.func(args)
    except GBRVFLError as exc:
        err = {"kind": exc.kind, "message": str(exc)}
        try:
            _write_json(os.path.join(args.out, "error.json"), err)
        except OSError:
            pass
        print(json.dumps({"error": err}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
