"""Command line interface.

Subcommands: synth, theory, fit, predict, oracle, and
reproduce {fig1|fig2|fig3|fig4|runtime}. Every stochastic command requires
--seed. All outputs are CSV plus a human-readable summary on stdout.
Exit codes: 0 success, 1 input error (bad files, flags, shapes), 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .classify import (
    fit_algorithm1,
    fit_mtl_spca_binary,
    fit_pca,
    fit_spca_binary,
    load_model,
    predict,
    save_model,
)
from .data import (
    config_to_mixture,
    load_csv,
    load_features,
    parse_config,
    save_csv,
    synth_gaussian,
)
from .errors import InputError, NumericalError
from .estimation import exact_stats
from .theory import (
    mtl_score_law,
    optimal_error,
    optimal_labels,
    pca_score_law,
    phase_transition,
    spca_score_law,
)

FIT_METHODS = ("pca", "spca", "mtl", "ova")


class _Parser(argparse.ArgumentParser):
    # bad flags are input errors (exit 1), not argparse's default exit 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="mtspca",
        description="Multi-task supervised PCA classification and its "
        "asymptotic performance predictions.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="draw a labeled dataset from a config")
    sp.add_argument("--config", required=True, help="key = value mixture config")
    sp.add_argument("--seed", required=True, type=int)
    sp.add_argument("--out", required=True, help="output CSV path")

    sp = sub.add_parser("theory", help="closed-form predictions for a config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", help="optional CSV path (task,method,error)")

    sp = sub.add_parser("fit", help="fit a classifier on a labeled CSV")
    sp.add_argument("--data", required=True)
    sp.add_argument("--method", required=True, choices=FIT_METHODS)
    sp.add_argument("--target", type=int, default=1, help="target task, 1-based")
    sp.add_argument("--tau", type=int, help="projector rank (pca only)")
    sp.add_argument("--out", required=True, help="model file path")

    sp = sub.add_parser("predict", help="classify points with a saved model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True, help="feature CSV (labels optional)")
    sp.add_argument("--out", required=True, help="predictions CSV path")

    sp = sub.add_parser("oracle", help="Monte-Carlo check of a score law")
    sp.add_argument("--config", required=True)
    sp.add_argument("--method", choices=("pca", "spca", "mtl"), default="spca")
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--tau", type=int, default=1)
    sp.add_argument("--target", type=int, default=1)
    sp.add_argument("--seed", required=True, type=int)
    sp.add_argument("--out", help="optional CSV path")

    sp = sub.add_parser("reproduce", help="rerun a paper-scale experiment")
    sp.add_argument("experiment", choices=("fig1", "fig2", "fig3", "fig4", "runtime"))
    sp.add_argument("--seed", required=True, type=int)
    sp.add_argument("--trials", type=int, help="trials per grid point")
    sp.add_argument("--out", required=True, help="report CSV path")
    return ap


def _task_of(args) -> int:
    if args.target < 1:
        raise InputError("--target is 1-based")
    return args.target - 1


def _cmd_synth(args) -> int:
    cfg = parse_config(args.config)
    spec = config_to_mixture(cfg)
    ds = synth_gaussian(spec, np.random.default_rng(args.seed))
    save_csv(ds, args.out)
    print(
        f"wrote {ds.layout.n} samples, {ds.p} features, "
        f"{ds.layout.k} task(s) x {ds.layout.m} class(es) to {args.out}"
    )
    return 0


def _cmd_theory(args) -> int:
    cfg = parse_config(args.config)
    spec = config_to_mixture(cfg)
    stats = exact_stats(spec)
    summary = phase_transition(stats.signal, stats.ratio)
    k, m = spec.layout.k, spec.layout.m
    print(f"dimension p={spec.p}, n={spec.layout.n}, c0={stats.ratio:.6g}")
    print(
        "spikes: "
        + ", ".join(
            f"{v:.4g}{'' if vis else ' (invisible)'}"
            for v, vis in zip(summary.spikes, summary.visible)
        )
    )
    print(f"noise bulk edges: [{summary.bulk_edges[0]:.4g}, {summary.bulk_edges[1]:.4g}]")
    rows = []
    law_pca = pca_score_law(stats.signal, stats.proportions, stats.ratio)
    law_spca = spca_score_law(stats.signal, stats.proportions, stats.ratio)
    for t in range(k):
        if m == 2:
            a, b = spec.layout.block_index(t, 0), spec.layout.block_index(t, 1)
            rows.append((t, "pca", float(law_pca.pair_errors[a, b])))
            rows.append((t, "spca", float(law_spca.pair_errors[a, b])))
            naive = np.tile([-1.0, 1.0], k)
            law_naive = mtl_score_law(stats.signal, stats.proportions, stats.ratio, naive)
            rows.append((t, "n-spca", float(law_naive.task_errors[t])))
            opt = optimal_error(stats.signal, stats.proportions, stats.ratio, t)
            rows.append((t, "mtl-spca", opt))
            lab = optimal_labels(stats.signal, stats.proportions, t)
            lab = lab / np.linalg.norm(lab)
            print(f"task {t + 1}: optimal labels " + " ".join("%.6g" % v for v in lab))
        else:
            worst = 0.0
            for j1 in range(m):
                for j2 in range(j1 + 1, m):
                    a = spec.layout.block_index(t, j1)
                    b = spec.layout.block_index(t, j2)
                    worst = max(worst, float(law_spca.pair_errors[a, b]))
            rows.append((t, "spca-worst-pair", worst))
    for t, method, err in rows:
        print(f"task {t + 1:2d}  {method:12s} error {err:.6f}")
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("task,method,error\n")
            for t, method, err in rows:
                fh.write(f"{t + 1},{method},{'%.17g' % err}\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_fit(args) -> int:
    ds = load_csv(args.data)
    target = _task_of(args)
    if target >= ds.layout.k:
        raise InputError(f"--target {args.target} but data has {ds.layout.k} task(s)")
    if args.method == "pca":
        model = fit_pca(ds, target_task=target, tau=args.tau)
    elif args.method == "spca":
        model = fit_spca_binary(ds, target_task=target)
    elif args.method == "mtl":
        model = fit_mtl_spca_binary(ds, target_task=target)
    else:
        model = fit_algorithm1(ds, target_task=target)
    save_model(model, args.out)
    print(f"fit {args.method} on {ds.layout.n} samples (p={ds.p}), model -> {args.out}")
    if model.predicted_errors is not None:
        print(
            f"predicted target-task error {model.predicted_errors[target]:.6f}"
        )
    if model.kind == "pca" and model.chance_default:
        print("warning: no visible spike, model predicts at chance")
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    x = load_features(args.data)
    labels = predict(model, x)
    with open(args.out, "w", newline="\n") as fh:
        fh.write("index,predicted_class\n")
        for i, c in enumerate(np.atleast_1d(labels)):
            fh.write(f"{i},{int(c) + 1}\n")
    counts = np.bincount(np.atleast_1d(labels), minlength=model.layout.m)
    share = ", ".join(
        f"class {j + 1}: {c}" for j, c in enumerate(counts)
    )
    print(f"predicted {x.shape[1]} points -> {args.out} ({share})")
    return 0


def _cmd_oracle(args) -> int:
    cfg = parse_config(args.config)
    spec = config_to_mixture(cfg)
    stats = exact_stats(spec)
    target = _task_of(args)
    if args.method == "pca":
        law = pca_score_law(stats.signal, stats.proportions, stats.ratio, args.tau)
        emp = harness.monte_carlo_oracle(
            spec, trials=args.trials, method="pca", tau=args.tau, seed=args.seed
        )
        theory_means = law.means[:, : args.tau]
    else:
        if args.method == "mtl":
            labels = optimal_labels(stats.signal, stats.proportions, target)
        else:
            labels = None
        if labels is None:
            labels_used = np.tile([-1.0, 1.0], spec.layout.k)
        else:
            labels_used = labels
        law = mtl_score_law(stats.signal, stats.proportions, stats.ratio, labels_used)
        emp = harness.monte_carlo_oracle(
            spec, labels=labels, trials=args.trials, method="spca", seed=args.seed
        )
        theory_means = law.means
    diff = np.max(np.abs(emp.means - theory_means))
    var_lo, var_hi = float(np.min(emp.variances)), float(np.max(emp.variances))
    print(
        f"{emp.draws} draws/block: max |empirical - theory| mean gap {diff:.4f}, "
        f"score variances in [{var_lo:.3f}, {var_hi:.3f}]"
    )
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("block,component,theory_mean,empirical_mean,empirical_var,stderr\n")
            nb, nc = emp.means.shape
            for a in range(nb):
                for i in range(nc):
                    fh.write(
                        f"{a + 1},{i + 1},{'%.17g' % theory_means[a, i]},"
                        f"{'%.17g' % emp.means[a, i]},{'%.17g' % emp.variances[a, i]},"
                        f"{'%.17g' % emp.stderrs[a, i]}\n"
                    )
        print(f"wrote {args.out}")
    return 0


def _cmd_reproduce(args) -> int:
    kwargs = {}
    if args.trials is not None:
        kwargs["n_trials"] = args.trials
    if args.experiment == "fig1":
        report = harness.run_fig1(seed=args.seed, **kwargs)
    elif args.experiment == "fig2":
        report = harness.run_fig2(seed=args.seed, **kwargs)
    elif args.experiment == "fig3":
        report = harness.run_fig3_synth(seed=args.seed, **kwargs)
    elif args.experiment == "fig4":
        report = harness.run_fig4_synth(seed=args.seed, **kwargs)
    else:
        if args.trials is not None:
            kwargs = {"repeats": args.trials}
        report = harness.run_runtime_bench(seed=args.seed, **kwargs)
    harness.save_report(report, args.out)
    print(f"{args.experiment}: sweep over {report.sweep}, report -> {args.out}")
    header = f"{report.sweep:>10s}  " + "".join(f"{m:>22s}" for m in report.methods)
    print(header)
    for i, v in enumerate(report.grid):
        cells = []
        for m in report.methods:
            th = report.theory[m][i]
            em = report.empirical[m][i]
            if np.isnan(th) and np.isnan(em):
                cells.append(f"{report.seconds[m][i]:>20.4f}s ")
            elif np.isnan(th):
                cells.append(f"{em:>21.4f} ")
            else:
                cells.append(f"{th:>10.4f}/{em:<10.4f} ")
        print(f"{v:>10.3g}  " + "".join(cells))
    if "exponent" in report.meta:
        print(f"scaling exponent {report.meta['exponent']}")
    return 0


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    handlers = {
        "synth": _cmd_synth,
        "theory": _cmd_theory,
        "fit": _cmd_fit,
        "predict": _cmd_predict,
        "oracle": _cmd_oracle,
        "reproduce": _cmd_reproduce,
    }
    try:
        args = ap.parse_args(argv)
        return handlers[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
