"""Seeded experiment reproduction and the Monte-Carlo validation oracle.

Every experiment derives one independent RNG stream per (master seed, role,
grid index, trial) tuple, so runs are bit-reproducible for a fixed seed,
trials can run in any order, and in the task-sweep experiment each task
keeps its own data as more tasks are added (single-task curves are exactly
flat by construction).

Reports hold one row per (sweep value, method) with theory error, empirical
error, standard error over trials, and wall-clock seconds; theory columns
are seed-independent and NaN where no closed form applies. The CSV schema is

    sweep_value,method,theory_error,empirical_error,stderr,seconds

with metadata as leading `# key value` comment lines; save/load round-trips.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .classify import (
    fit_algorithm1,
    fit_mtl_spca_binary,
    fit_pca,
    fit_spca_binary,
    predict,
)
from .data import (
    MixtureSpec,
    TaskDataset,
    binary_transfer_mixture,
    rotated_multiclass_mixture,
    single_task_view,
    synth_gaussian,
)
from .errors import InputError
from .estimation import exact_stats
from .linalg import sym_eig
from .theory import (
    mtl_score_law,
    optimal_error,
    optimal_labels,
    pca_score_law,
    phase_transition,
    spca_score_law,
)

__all__ = [
    "ExperimentReport",
    "EmpiricalScoreLaw",
    "save_report",
    "load_report",
    "run_fig1",
    "run_fig2",
    "run_fig3_synth",
    "run_fig4_synth",
    "run_runtime_bench",
    "monte_carlo_oracle",
]

# stream roles
_TRAIN, _TEST, _AUX = 0, 1, 2


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


@dataclass
class ExperimentReport:
    """Sweep results for a set of methods, one value per (method, point)."""

    sweep: str
    grid: np.ndarray
    methods: list[str]
    theory: dict[str, np.ndarray]
    empirical: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    seconds: dict[str, np.ndarray]
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if np.any(np.diff(self.grid) <= 0):
            raise InputError("sweep grid must be strictly increasing")
        for table in (self.theory, self.empirical, self.stderr, self.seconds):
            for m in self.methods:
                arr = np.asarray(table[m], dtype=float)
                if arr.shape != self.grid.shape:
                    raise InputError(f"column for {m} does not match grid length")
                table[m] = arr
        for m in self.methods:
            emp = self.empirical[m]
            ok = np.isnan(emp) | ((emp >= 0.0) & (emp <= 1.0))
            if not np.all(ok):
                raise InputError(f"empirical errors for {m} outside [0, 1]")


def save_report(report: ExperimentReport, path: str) -> None:
    lines = [f"# sweep {report.sweep}"]
    for key in sorted(report.meta):
        lines.append(f"# {key} {report.meta[key]}")
    lines.append("sweep_value,method,theory_error,empirical_error,stderr,seconds")
    for i, v in enumerate(report.grid):
        for m in report.methods:
            lines.append(
                ",".join(
                    [
                        "%.17g" % v,
                        m,
                        "%.17g" % report.theory[m][i],
                        "%.17g" % report.empirical[m][i],
                        "%.17g" % report.stderr[m][i],
                        "%.17g" % report.seconds[m][i],
                    ]
                )
            )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_report(path: str) -> ExperimentReport:
    meta: dict[str, str] = {}
    sweep = "value"
    rows = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split(" ", 1)
                if len(parts) == 2:
                    if parts[0] == "sweep":
                        sweep = parts[1]
                    else:
                        meta[parts[0]] = parts[1]
                continue
            if line.startswith("sweep_value"):
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise InputError(f"{path}:{ln}: expected 6 fields")
            rows.append(parts)
    if not rows:
        raise InputError(f"{path}: empty report")
    grid = sorted({float(r[0]) for r in rows})
    methods = list(dict.fromkeys(r[1] for r in rows))
    shape = (len(grid),)
    tables = {
        name: {m: np.full(shape, np.nan) for m in methods}
        for name in ("theory", "empirical", "stderr", "seconds")
    }
    gidx = {v: i for i, v in enumerate(grid)}
    for r in rows:
        i = gidx[float(r[0])]
        m = r[1]
        tables["theory"][m][i] = float(r[2])
        tables["empirical"][m][i] = float(r[3])
        tables["stderr"][m][i] = float(r[4])
        tables["seconds"][m][i] = float(r[5])
    return ExperimentReport(
        sweep=sweep,
        grid=np.asarray(grid),
        methods=methods,
        theory=tables["theory"],
        empirical=tables["empirical"],
        stderr=tables["stderr"],
        seconds=tables["seconds"],
        meta=meta,
    )


def _balanced_binary_test(
    spec: MixtureSpec, task: int, n_test: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Balanced test draw from one task's two classes; returns (x, truth)."""
    half = n_test // 2
    p = spec.p
    x = rng.standard_normal((p, 2 * half))
    x[:, :half] += spec.means[task, 0][:, None]
    x[:, half:] += spec.means[task, 1][:, None]
    truth = np.repeat([0, 1], half)
    return x, truth


def _empirical_column(errors: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(errors))
    if len(errors) > 1:
        se = float(np.std(errors, ddof=1) / np.sqrt(len(errors)))
    else:
        se = 0.0
    return mean, se


def run_fig1(
    seed: int = 0,
    grid: np.ndarray | None = None,
    n_trials: int = 10,
    n_test: int = 1000,
) -> ExperimentReport:
    """Binary single task, mean e_1, n=1000: error vs dimension p.

    PCA and label-guided (SPCA) classifiers, theory and empirical columns.
    The PCA projector rank at each grid point is the ground-truth
    visible-spike count; at p=n the spike sits exactly at the detectability
    threshold, the count is 0, and the classifier falls back to chance,
    matching the asymptotic error 1/2.
    """
    if grid is None:
        grid = np.arange(100, 1001, 100)
    grid = np.asarray(grid, dtype=int)
    methods = ["pca", "spca"]
    theory = {m: np.zeros(len(grid)) for m in methods}
    empirical = {m: np.zeros(len(grid)) for m in methods}
    stderr = {m: np.zeros(len(grid)) for m in methods}
    seconds = {m: np.zeros(len(grid)) for m in methods}
    for i, p in enumerate(grid):
        spec = binary_transfer_mixture(int(p), np.array([[500, 500]]), [1.0])
        stats = exact_stats(spec)
        law_pca = pca_score_law(stats.signal, stats.proportions, stats.ratio)
        theory["pca"][i] = law_pca.pair_errors[0, 1]
        law_spca = spca_score_law(stats.signal, stats.proportions, stats.ratio)
        theory["spca"][i] = law_spca.pair_errors[0, 1]
        tau_true = int(np.count_nonzero(phase_transition(stats.signal, stats.ratio).visible))
        errs = {m: np.zeros(n_trials) for m in methods}
        for s in range(n_trials):
            train = synth_gaussian(spec, _rng(seed, _TRAIN, i, s))
            test_x, truth = _balanced_binary_test(spec, 0, n_test, _rng(seed, _TEST, i, s))
            t0 = time.perf_counter()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = fit_pca(train, tau=tau_true)
            errs["pca"][s] = np.mean(predict(model, test_x) != truth)
            seconds["pca"][i] += time.perf_counter() - t0
            t0 = time.perf_counter()
            model = fit_spca_binary(train)
            errs["spca"][s] = np.mean(predict(model, test_x) != truth)
            seconds["spca"][i] += time.perf_counter() - t0
        for m in methods:
            empirical[m][i], stderr[m][i] = _empirical_column(errs[m])
    return ExperimentReport(
        sweep="p",
        grid=grid,
        methods=methods,
        theory=theory,
        empirical=empirical,
        stderr=stderr,
        seconds=seconds,
        meta={"seed": str(seed), "trials": str(n_trials), "n_test": str(n_test)},
    )


def run_fig2(
    seed: int = 0,
    grid: np.ndarray | None = None,
    n_trials: int = 10,
    n_test: int = 1000,
) -> ExperimentReport:
    """Two-task transfer: error vs task relatedness beta.

    Task 1 (n_1j=1000 per class) has mean e_1; the target task 2 (n_2j=50)
    has mean beta e_1 + sqrt(1-beta^2) e_p. Single-task (st-spca), naive
    labels on both tasks (n-spca), and optimal labels (mtl-spca)."""
    if grid is None:
        grid = np.linspace(0.0, 1.0, 10)
    grid = np.asarray(grid, dtype=float)
    p = 100
    counts = np.array([[1000, 1000], [50, 50]])
    target = 1
    methods = ["st-spca", "n-spca", "mtl-spca"]
    theory = {m: np.zeros(len(grid)) for m in methods}
    empirical = {m: np.zeros(len(grid)) for m in methods}
    stderr = {m: np.zeros(len(grid)) for m in methods}
    seconds = {m: np.zeros(len(grid)) for m in methods}
    st_spec = binary_transfer_mixture(p, counts[target : target + 1], [1.0])
    st_stats = exact_stats(st_spec)
    st_theory = optimal_error(st_stats.signal, st_stats.proportions, st_stats.ratio, 0)
    for i, beta in enumerate(grid):
        spec = binary_transfer_mixture(p, counts, [1.0, float(beta)])
        stats = exact_stats(spec)
        theory["st-spca"][i] = st_theory
        naive = np.tile([-1.0, 1.0], 2)
        law = mtl_score_law(stats.signal, stats.proportions, stats.ratio, naive)
        theory["n-spca"][i] = law.task_errors[target]
        theory["mtl-spca"][i] = optimal_error(
            stats.signal, stats.proportions, stats.ratio, target
        )
        errs = {m: np.zeros(n_trials) for m in methods}
        for s in range(n_trials):
            train = synth_gaussian(spec, _rng(seed, _TRAIN, i, s))
            test_x, truth = _balanced_binary_test(
                spec, target, n_test, _rng(seed, _TEST, i, s)
            )
            t0 = time.perf_counter()
            st_model = fit_spca_binary(single_task_view(train, target))
            errs["st-spca"][s] = np.mean(predict(st_model, test_x) != truth)
            seconds["st-spca"][i] += time.perf_counter() - t0
            t0 = time.perf_counter()
            n_model = fit_spca_binary(train, target_task=target)
            errs["n-spca"][s] = np.mean(predict(n_model, test_x) != truth)
            seconds["n-spca"][i] += time.perf_counter() - t0
            t0 = time.perf_counter()
            m_model = fit_mtl_spca_binary(train, target_task=target)
            errs["mtl-spca"][s] = np.mean(predict(m_model, test_x) != truth)
            seconds["mtl-spca"][i] += time.perf_counter() - t0
        for m in methods:
            empirical[m][i], stderr[m][i] = _empirical_column(errs[m])
    return ExperimentReport(
        sweep="beta",
        grid=grid,
        methods=methods,
        theory=theory,
        empirical=empirical,
        stderr=stderr,
        seconds=seconds,
        meta={"seed": str(seed), "trials": str(n_trials), "n_test": str(n_test)},
    )


def run_fig3_synth(
    seed: int = 0,
    grid: tuple[int, ...] = (2, 4, 8, 16, 32, 64, 128, 256),
    n_trials: int = 10,
    n_test: int = 10000,
) -> ExperimentReport:
    """Error vs number of tasks with random task relatedness.

    p=200; the target task has 50 samples per class, every added task 5 per
    class; each trial draws fresh beta_t uniform in [0, 1] for all tasks.
    Per trial, task data are keyed by task index, so growing the task count
    keeps earlier tasks' samples fixed: the single-task curve is exactly
    flat and the sweep isolates the effect of the added tasks.

    The optimal label scores are computed from the generating mixture's
    population statistics (the sweep isolates the label-design effect; with
    5-sample blocks and up to 512 blocks the plug-in estimate of a 512x512
    statistic is hopeless, and any estimation scheme would swamp the curves
    in noise). Estimate-based fitting is exercised by the other experiments.
    The report is empirical only: no closed-form column for a sweep whose
    per-point value is itself a random function of the drawn betas."""
    grid = tuple(int(k) for k in grid)
    p = 200
    kmax = max(grid)
    methods = ["st-spca", "n-spca", "mtl-spca"]
    nan = np.full(len(grid), np.nan)
    empirical = {m: np.zeros(len(grid)) for m in methods}
    stderr = {m: np.zeros(len(grid)) for m in methods}
    seconds = {m: np.zeros(len(grid)) for m in methods}
    errs = {m: np.zeros((len(grid), n_trials)) for m in methods}
    for s in range(n_trials):
        betas = _rng(seed, _AUX, s).uniform(0.0, 1.0, size=kmax)
        spec_full = binary_transfer_mixture(
            p, np.vstack([[50, 50], np.tile([5, 5], (kmax - 1, 1))]), betas
        )
        blocks = []
        for t in range(kmax):
            rng_t = _rng(seed, _TRAIN, s, t)
            nt = spec_full.layout.counts[t].sum()
            xb = rng_t.standard_normal((p, nt))
            xb[:, : nt // 2] += spec_full.means[t, 0][:, None]
            xb[:, nt // 2 :] += spec_full.means[t, 1][:, None]
            blocks.append(xb)
        test_x, truth = _balanced_binary_test(spec_full, 0, n_test, _rng(seed, _TEST, s))
        for i, k in enumerate(grid):
            sub = binary_transfer_mixture(
                p, spec_full.layout.counts[:k], betas[:k]
            )
            train = TaskDataset(
                x=np.concatenate(blocks[:k], axis=1), layout=sub.layout
            )
            t0 = time.perf_counter()
            st_model = fit_spca_binary(single_task_view(train, 0))
            errs["st-spca"][i, s] = np.mean(predict(st_model, test_x) != truth)
            seconds["st-spca"][i] += time.perf_counter() - t0
            t0 = time.perf_counter()
            n_model = fit_spca_binary(train)
            errs["n-spca"][i, s] = np.mean(predict(n_model, test_x) != truth)
            seconds["n-spca"][i] += time.perf_counter() - t0
            t0 = time.perf_counter()
            ex = exact_stats(sub)
            lab = optimal_labels(ex.signal, ex.proportions, 0)
            m_model = fit_spca_binary(train, labels=lab)
            errs["mtl-spca"][i, s] = np.mean(predict(m_model, test_x) != truth)
            seconds["mtl-spca"][i] += time.perf_counter() - t0
    for m in methods:
        for i in range(len(grid)):
            empirical[m][i], stderr[m][i] = _empirical_column(errs[m][i])
    return ExperimentReport(
        sweep="tasks",
        grid=np.asarray(grid),
        methods=methods,
        theory={m: nan.copy() for m in methods},
        empirical=empirical,
        stderr=stderr,
        seconds=seconds,
        meta={"seed": str(seed), "trials": str(n_trials), "n_test": str(n_test)},
    )


def run_fig4_synth(
    seed: int = 0, n_trials: int = 10, n_test: int = 1000
) -> ExperimentReport:
    """Multi-class one-vs-all on the 3-task, 10-class synthetic instance.

    Class means 2 e_j rotated per task by beta in (0.2, 0.4, 0.6); the
    50-per-class third task is the target. Single sweep point."""
    p = 200
    m_classes = 10
    counts = np.array([[100] * m_classes, [100] * m_classes, [50] * m_classes])
    betas = np.array([0.2, 0.4, 0.6])
    target = 2
    spec = rotated_multiclass_mixture(p, counts, betas, scale=2.0)
    per_class = n_test // m_classes
    errors = np.zeros(n_trials)
    secs = 0.0
    for s in range(n_trials):
        train = synth_gaussian(spec, _rng(seed, _TRAIN, s))
        rng_test = _rng(seed, _TEST, s)
        test_x = rng_test.standard_normal((p, per_class * m_classes))
        truth = np.repeat(np.arange(m_classes), per_class)
        for j in range(m_classes):
            cols = slice(j * per_class, (j + 1) * per_class)
            test_x[:, cols] += spec.means[target, j][:, None]
        t0 = time.perf_counter()
        model = fit_algorithm1(train, target_task=target)
        errors[s] = np.mean(predict(model, test_x) != truth)
        secs += time.perf_counter() - t0
    mean, se = _empirical_column(errors)
    return ExperimentReport(
        sweep="tasks",
        grid=np.array([3.0]),
        methods=["one-vs-all"],
        theory={"one-vs-all": np.array([np.nan])},
        empirical={"one-vs-all": np.array([mean])},
        stderr={"one-vs-all": np.array([se])},
        seconds={"one-vs-all": np.array([secs])},
        meta={"seed": str(seed), "trials": str(n_trials), "n_test": str(n_test)},
    )


def run_runtime_bench(
    seed: int = 0,
    grid: tuple[int, ...] = (256, 512, 1024, 2048),
    repeats: int = 5,
) -> ExperimentReport:
    """Wall-clock of the full one-vs-all pipeline plus a test pass vs p.

    Two tasks, n=2p, every block n/4 samples; test batch of n points. The
    timed section covers everything a fresh fit does (z-scoring, per-head
    views, statistics, label design, filters) plus prediction; data
    generation is excluded. Each point reports the median of `repeats` runs
    after one warmup. The fitted power-law exponent of seconds vs p lands
    in meta["exponent"]."""
    grid = tuple(int(p) for p in grid)
    secs = np.zeros(len(grid))
    for i, p in enumerate(grid):
        n4 = p // 2  # n = 2p, so each of the 4 blocks has n/4 = p/2 samples
        spec = binary_transfer_mixture(p, np.array([[n4, n4], [n4, n4]]), [1.0, 0.5])
        train = synth_gaussian(spec, _rng(seed, _TRAIN, i))
        test_x, _ = _balanced_binary_test(spec, 0, 2 * p, _rng(seed, _TEST, i))
        times = []
        for r in range(repeats + 1):
            t0 = time.perf_counter()
            model = fit_algorithm1(train)
            predict(model, test_x)
            dt = time.perf_counter() - t0
            if r > 0:  # first run warms caches and allocator
                times.append(dt)
        secs[i] = float(np.median(times))
    slope = np.polyfit(np.log(np.asarray(grid, float)), np.log(secs), 1)[0]
    nan = np.full(len(grid), np.nan)
    return ExperimentReport(
        sweep="p",
        grid=np.asarray(grid),
        methods=["mtl-spca"],
        theory={"mtl-spca": nan.copy()},
        empirical={"mtl-spca": nan.copy()},
        stderr={"mtl-spca": nan.copy()},
        seconds={"mtl-spca": secs},
        meta={"seed": str(seed), "repeats": str(repeats), "exponent": "%.6f" % slope},
    )


@dataclass(frozen=True)
class EmpiricalScoreLaw:
    """Monte-Carlo estimate of a projected-score law.

    means/variances: per (block, component) over all draws; stderrs:
    standard error of each mean; draws: test draws per block."""

    means: np.ndarray
    variances: np.ndarray
    stderrs: np.ndarray
    draws: int


def monte_carlo_oracle(
    spec: MixtureSpec,
    labels: np.ndarray | None = None,
    trials: int = 10000,
    method: str = "spca",
    tau: int = 1,
    realizations: int = 100,
    seed: int = 0,
) -> EmpiricalScoreLaw:
    """Empirical score law of a freshly fitted projector, per class block.

    Each of `realizations` training draws fits a projector (pca: top-tau
    sample eigenvectors with sign alignment; spca: matched filter for
    `labels`, naive labels when None); `trials` test scores per block are
    then accumulated across realizations, so the estimate reflects the
    actual pipeline including estimation noise. Used to pin the theory
    constants: empirical means should match the score law within sampling
    error, empirical variances should be near 1.
    """
    if trials < realizations:
        raise InputError("trials must be >= realizations")
    if method not in ("pca", "spca"):
        raise InputError(f"unknown oracle method {method!r}")
    layout = spec.layout
    nb = layout.n_blocks
    per = trials // realizations
    ncomp = tau if method == "pca" else 1
    align = None
    if method == "pca":
        # eigenvector signs are a per-fit convention; pin every realization
        # to the population gauge so accumulated scores do not cancel
        ex = exact_stats(spec)
        ubar = sym_eig(ex.signal).vectors
        align = spec.flat_means().T @ (np.sqrt(ex.proportions)[:, None] * ubar)
    ssum = np.zeros((nb, ncomp))
    ssq = np.zeros((nb, ncomp))
    total = 0
    for r in range(realizations):
        train = synth_gaussian(spec, _rng(seed, _TRAIN, r))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if method == "pca":
                model = fit_pca(train, tau=tau)
            else:
                model = fit_spca_binary(train, labels=labels)
        basis = model.projector.basis
        if align is not None:
            ncol = min(basis.shape[1], align.shape[1])
            flip = np.sign(np.einsum("pi,pi->i", basis[:, :ncol], align[:, :ncol]))
            flip[flip == 0] = 1.0
            basis = basis * np.concatenate([flip, np.ones(basis.shape[1] - ncol)])
        rng = _rng(seed, _TEST, r)
        for a in range(nb):
            t, j = divmod(a, layout.m)
            x = rng.standard_normal((spec.p, per)) + spec.means[t, j][:, None]
            scores = basis.T @ x
            ssum[a] += scores.sum(axis=1)
            ssq[a] += (scores * scores).sum(axis=1)
        total += per
    means = ssum / total
    variances = ssq / total - means**2
    stderrs = np.sqrt(variances / total)
    return EmpiricalScoreLaw(
        means=means, variances=variances, stderrs=stderrs, draws=total
    )
