"""Experiment harness: report serialization, seeded reproducibility, the
sweep runners on small grids, and the Monte-Carlo score-law oracle."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import mtspca
from mtspca.errors import InputError
from mtspca.estimation import exact_stats
from mtspca.harness import (
    ExperimentReport,
    load_report,
    monte_carlo_oracle,
    run_fig1,
    run_fig2,
    run_fig3_synth,
    run_fig4_synth,
    run_runtime_bench,
    save_report,
)
from mtspca.theory import spca_score_law


def _toy_report():
    nan = float("nan")
    return ExperimentReport(
        sweep="p",
        grid=np.array([100.0, 200.0]),
        methods=["alpha", "beta"],
        theory={"alpha": np.array([0.1, nan]), "beta": np.array([0.3, 0.4])},
        empirical={"alpha": np.array([0.12, 0.2]), "beta": np.array([nan, 0.41])},
        stderr={"alpha": np.array([0.01, 0.02]), "beta": np.array([0.0, 0.005])},
        seconds={"alpha": np.array([1.5, 2.5]), "beta": np.array([0.25, 1.0 / 3.0])},
        meta={"seed": "11", "trials": "4"},
    )


class TestReportSerialization:
    def test_round_trip_is_exact(self, tmp_path):
        report = _toy_report()
        path = tmp_path / "report.csv"
        save_report(report, str(path))
        back = load_report(str(path))
        assert back.sweep == report.sweep
        assert back.methods == report.methods
        assert back.meta == report.meta
        assert_array_equal(back.grid, report.grid)
        for m in report.methods:
            # NaN-aware exact comparison; 17 digits round-trip float64
            assert_array_equal(back.theory[m], report.theory[m])
            assert_array_equal(back.empirical[m], report.empirical[m])
            assert_array_equal(back.stderr[m], report.stderr[m])
            assert_array_equal(back.seconds[m], report.seconds[m])

    def test_shuffled_rows_are_canonicalized(self, tmp_path):
        path = tmp_path / "report.csv"
        path.write_text(
            "# sweep beta\n"
            "# seed 7\n"
            "sweep_value,method,theory_error,empirical_error,stderr,seconds\n"
            "1,m,0.2,0.3,0.01,0.5\n"
            "0.5,m,0.1,0.25,0.02,0.4\n"
        )
        back = load_report(str(path))
        assert back.sweep == "beta"
        assert back.meta == {"seed": "7"}
        assert_array_equal(back.grid, [0.5, 1.0])
        assert_array_equal(back.theory["m"], [0.1, 0.2])
        assert_array_equal(back.empirical["m"], [0.25, 0.3])

    def test_rejects_malformed_rows(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "sweep_value,method,theory_error,empirical_error,stderr,seconds\n"
            "1,m,0.2,0.3,0.01\n"
        )
        with pytest.raises(InputError):
            load_report(str(path))

    def test_rejects_empty_report(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(
            "sweep_value,method,theory_error,empirical_error,stderr,seconds\n"
        )
        with pytest.raises(InputError):
            load_report(str(path))

    def test_validation_guards(self):
        report = _toy_report()
        with pytest.raises(InputError):
            ExperimentReport(
                sweep="p",
                grid=np.array([2.0, 1.0]),
                methods=report.methods,
                theory=report.theory,
                empirical=report.empirical,
                stderr=report.stderr,
                seconds=report.seconds,
            )
        bad = {m: report.empirical[m].copy() for m in report.methods}
        bad["alpha"][0] = 1.5
        with pytest.raises(InputError):
            ExperimentReport(
                sweep="p",
                grid=report.grid,
                methods=report.methods,
                theory=report.theory,
                empirical=bad,
                stderr=report.stderr,
                seconds=report.seconds,
            )
        short = {m: report.theory[m][:1] for m in report.methods}
        with pytest.raises(InputError):
            ExperimentReport(
                sweep="p",
                grid=report.grid,
                methods=report.methods,
                theory=short,
                empirical=report.empirical,
                stderr=report.stderr,
                seconds=report.seconds,
            )


class TestReproducibility:
    def test_same_seed_bitwise_identical(self):
        kw = dict(seed=3, grid=[100], n_trials=2, n_test=300)
        a = run_fig1(**kw)
        b = run_fig1(**kw)
        for m in a.methods:
            assert_array_equal(a.theory[m], b.theory[m])
            assert_array_equal(a.empirical[m], b.empirical[m])
            assert_array_equal(a.stderr[m], b.stderr[m])

    def test_theory_columns_ignore_seed(self):
        grid = np.array([0.0, 1.0])
        a = run_fig2(seed=1, grid=grid, n_trials=1, n_test=50)
        b = run_fig2(seed=2, grid=grid, n_trials=1, n_test=50)
        for m in a.methods:
            assert_array_equal(a.theory[m], b.theory[m])


class TestDimensionSweep:
    def test_endpoint_theory_and_chance_collapse(self):
        report = run_fig1(seed=3, grid=[100, 1000], n_trials=2, n_test=500)
        assert_allclose(report.theory["pca"][0], 0.18286, atol=1e-5)
        assert_allclose(report.theory["spca"][0], 0.17018, atol=1e-5)
        # at p=n the lone spike sits on the detection threshold: PCA sees
        # nothing and the constant-class fallback scores exactly chance
        assert report.theory["pca"][1] == 0.5
        assert report.empirical["pca"][1] == 0.5
        assert report.stderr["pca"][1] == 0.0
        assert_allclose(report.theory["spca"][1], 0.23975, atol=1e-5)
        assert report.sweep == "p"
        assert report.meta["trials"] == "2"


class TestRelatednessSweep:
    def test_theory_anchors_and_dominance(self):
        grid = np.array([0.0, 4.0 / 9.0, 1.0])
        report = run_fig2(seed=5, grid=grid, n_trials=1, n_test=50)
        assert_allclose(report.theory["st-spca"], 0.23975, atol=1e-5)
        assert_allclose(report.theory["n-spca"][0], 0.48059, atol=1e-5)
        assert_allclose(report.theory["n-spca"][2], 0.16428, atol=1e-5)
        assert_allclose(report.theory["mtl-spca"][1], 0.22877, atol=1e-5)
        assert_allclose(report.theory["mtl-spca"][2], 0.16428, atol=1e-5)
        # optimal labels never do worse than ignoring the other task
        assert np.all(report.theory["mtl-spca"] <= report.theory["st-spca"] + 1e-12)
        assert np.all(report.stderr["mtl-spca"] == 0.0)  # single trial


class TestTaskSweep:
    def test_single_task_curve_is_exactly_flat(self):
        report = run_fig3_synth(seed=11, grid=(2, 4), n_trials=3, n_test=400)
        # per-task data are keyed by task index, so adding tasks leaves the
        # target task's own samples untouched
        assert report.empirical["st-spca"][0] == report.empirical["st-spca"][1]
        assert report.stderr["st-spca"][0] == report.stderr["st-spca"][1]
        for m in report.methods:
            assert np.all(np.isnan(report.theory[m]))
            assert np.all(np.isfinite(report.empirical[m]))


class TestMulticlassRun:
    def test_small_run_beats_chance(self):
        report = run_fig4_synth(seed=2, n_trials=1, n_test=100)
        assert report.methods == ["one-vs-all"]
        assert_array_equal(report.grid, [3.0])
        err = report.empirical["one-vs-all"][0]
        assert 0.0 <= err < 0.6  # chance is 0.9 for 10 classes


class TestRuntimeBench:
    def test_small_grid_mechanics(self):
        report = run_runtime_bench(seed=0, grid=(64, 128), repeats=1)
        secs = report.seconds["mtl-spca"]
        assert np.all(secs > 0.0)
        float(report.meta["exponent"])  # parseable power-law slope
        assert np.all(np.isnan(report.empirical["mtl-spca"]))
        assert report.sweep == "p"


class TestMonteCarloOracle:
    def test_matched_filter_law_magnitudes(self):
        spec = mtspca.binary_transfer_mixture(50, np.array([[250, 250]]), [1.0])
        stats = exact_stats(spec)
        law = spca_score_law(stats.signal, stats.proportions, stats.ratio)
        emp = monte_carlo_oracle(spec, trials=2000, realizations=20, seed=9)
        # the filter's global sign follows the label orientation, so compare
        # magnitudes and require the two classes to sit on opposite sides
        assert_allclose(
            np.abs(emp.means[:, 0]), np.abs(law.means[:, 0]), atol=0.1
        )
        assert emp.means[0, 0] * emp.means[1, 0] < 0.0
        assert_allclose(emp.variances[:, 0], 1.0, atol=0.15)
        assert emp.draws == 2000

    def test_input_guards(self):
        spec = mtspca.binary_transfer_mixture(20, np.array([[30, 30]]), [1.0])
        with pytest.raises(InputError):
            monte_carlo_oracle(spec, trials=10, realizations=20)
        with pytest.raises(InputError):
            monte_carlo_oracle(spec, trials=100, realizations=10, method="lda")
