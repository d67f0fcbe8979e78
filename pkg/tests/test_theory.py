"""Closed-form score laws: spike visibility, per-method error predictions,
optimal label design, and the separation gap formulas."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

import mtspca
from mtspca.errors import InputError
from mtspca.estimation import exact_stats
from mtspca.theory import (
    mtl_score_law,
    optimal_error,
    optimal_labels,
    pca_score_law,
    pca_spca_gap,
    phase_transition,
    qfunc,
    spca_score_law,
)


def _single_task_stats(p, per=500):
    spec = mtspca.binary_transfer_mixture(p, np.array([[per, per]]), [1.0])
    return exact_stats(spec)


def _two_task_stats(beta):
    spec = mtspca.binary_transfer_mixture(
        100, np.array([[1000, 1000], [50, 50]]), [1.0, float(beta)]
    )
    return exact_stats(spec)


class TestQfunc:
    def test_symmetry_point(self):
        assert qfunc(0.0) == 0.5

    def test_one_sigma(self):
        assert_allclose(qfunc(1.0), 0.158655, atol=1e-6)

    def test_known_argument(self):
        assert_allclose(qfunc(0.9535), 0.1702, atol=5e-5)

    def test_vectorized_monotone(self):
        t = np.linspace(-3, 3, 13)
        q = qfunc(t)
        assert np.all(np.diff(q) < 0)
        assert_allclose(q + qfunc(-t), 1.0, atol=1e-14)


class TestPhaseTransition:
    def test_square_case_bulk_edge(self):
        summary = phase_transition(np.zeros((2, 2)), 1.0)
        assert_allclose(summary.bulk_edges[1], 4.0)
        assert not summary.visible.any()

    def test_at_threshold_spike_not_separated(self):
        # spike exactly at 1/sqrt(c0) must read as invisible
        st = _single_task_stats(1000)
        summary = phase_transition(st.signal, st.ratio)
        assert_allclose(summary.spikes[0], 1.0, atol=1e-12)
        assert not summary.visible[0]
        assert_allclose(summary.sample_spikes[0], summary.bulk_edges[1])

    def test_visible_spike_location(self):
        st = _single_task_stats(100)
        summary = phase_transition(st.signal, st.ratio)
        assert summary.visible[0]
        # 1 + 1/c0 + l + 1/(c0 l) at c0=0.1, l=10
        assert_allclose(summary.sample_spikes[0], 22.0, atol=1e-10)

    def test_rejects_bad_ratio(self):
        with pytest.raises(InputError):
            phase_transition(np.eye(2), 0.0)


class TestPcaScoreLaw:
    def test_anchor_p100(self):
        st = _single_task_stats(100)
        law = pca_score_law(st.signal, st.proportions, st.ratio)
        assert law.tau == 1
        assert_allclose(law.pair_errors[0, 1], 0.18286, atol=5e-4)

    def test_anchor_p1000_chance(self):
        st = _single_task_stats(1000)
        law = pca_score_law(st.signal, st.proportions, st.ratio, tau=1)
        # invisible spike carries no signal: all means zero, error 1/2
        assert_allclose(law.means, 0.0, atol=1e-12)
        assert_allclose(law.pair_errors[0, 1], 0.5)

    def test_default_tau_counts_visible_spikes(self):
        st = _single_task_stats(1000)
        assert pca_score_law(st.signal, st.proportions, st.ratio).tau == 0

    def test_spca_dominates_pca(self):
        # label-guided projection is never worse on balanced binary instances
        rng = np.random.default_rng(40)
        for _ in range(20):
            p = int(rng.integers(50, 400))
            per = int(rng.integers(100, 800))
            beta = float(rng.uniform(0.0, 1.0))
            scale = float(rng.uniform(0.5, 2.0))
            spec = mtspca.binary_transfer_mixture(
                p, np.array([[per, per]]), [beta], scale=scale
            )
            st = exact_stats(spec)
            pca = pca_score_law(st.signal, st.proportions, st.ratio, tau=1)
            spca = spca_score_law(st.signal, st.proportions, st.ratio)
            assert spca.pair_errors[0, 1] <= pca.pair_errors[0, 1] + 1e-12


class TestSpcaScoreLaw:
    def test_anchor_p100(self):
        st = _single_task_stats(100)
        law = spca_score_law(st.signal, st.proportions, st.ratio)
        assert_allclose(law.pair_errors[0, 1], 0.17018, atol=5e-4)

    def test_anchor_p1000(self):
        st = _single_task_stats(1000)
        law = spca_score_law(st.signal, st.proportions, st.ratio)
        assert_allclose(law.pair_errors[0, 1], 0.23975, atol=5e-4)

    def test_no_signal_means_chance(self):
        law = spca_score_law(np.zeros((2, 2)), np.array([0.5, 0.5]), 0.1)
        assert_allclose(law.pair_errors[0, 1], 0.5)


class TestMtlScoreLaw:
    def test_uniform_labels_two_task_anchors(self):
        naive = np.tile([-1.0, 1.0], 2)
        st = _two_task_stats(1.0)
        law = mtl_score_law(st.signal, st.proportions, st.ratio, naive)
        assert_allclose(law.task_errors[1], 0.16428, atol=5e-4)
        st = _two_task_stats(0.0)
        law = mtl_score_law(st.signal, st.proportions, st.ratio, naive)
        # unrelated auxiliary task drags the target down to near chance
        assert_allclose(law.task_errors[1], 0.48059, atol=5e-4)

    def test_scale_invariance(self):
        st = _two_task_stats(0.5)
        y = np.array([-1.0, 1.0, -0.3, 0.3])
        a = mtl_score_law(st.signal, st.proportions, st.ratio, y)
        b = mtl_score_law(st.signal, st.proportions, st.ratio, 2.0 * y)
        assert_allclose(a.means, b.means, atol=1e-12)
        assert_allclose(a.task_errors, b.task_errors, atol=1e-14)

    def test_matrix_single_column_matches_vector(self):
        st = _two_task_stats(0.5)
        y = np.array([-1.0, 1.0, -0.3, 0.3])
        vec = mtl_score_law(st.signal, st.proportions, st.ratio, y)
        mat = mtl_score_law(st.signal, st.proportions, st.ratio, y[:, None])
        assert_allclose(np.abs(mat.means[:, 0]), np.abs(vec.means[:, 0]), atol=1e-10)
        assert_allclose(mat.separations, vec.separations, atol=1e-10)

    def test_thresholds_are_midpoints(self):
        st = _two_task_stats(0.7)
        law = mtl_score_law(st.signal, st.proportions, st.ratio, np.tile([-1.0, 1.0], 2))
        mv = law.means[:, 0]
        assert_allclose(law.thresholds, [(mv[0] + mv[1]) / 2, (mv[2] + mv[3]) / 2])

    def test_rejects_zero_labels(self):
        st = _two_task_stats(0.5)
        with pytest.raises(InputError):
            mtl_score_law(st.signal, st.proportions, st.ratio, np.zeros(4))

    def test_rejects_wrong_length(self):
        st = _two_task_stats(0.5)
        with pytest.raises(InputError):
            mtl_score_law(st.signal, st.proportions, st.ratio, np.ones(3))


class TestOptimalLabels:
    def test_single_task_balanced_symmetry(self):
        st = _single_task_stats(100)
        lab = optimal_labels(st.signal, st.proportions, 0)
        assert_allclose(lab[0], -lab[1], atol=1e-12)
        assert abs(lab[0]) > 0

    def test_block_diagonal_nulls_foreign_tasks(self):
        rng = np.random.default_rng(41)
        signal = np.zeros((6, 6))
        for t in range(3):
            b = rng.standard_normal((2, 3))
            blk = b @ b.T / 3
            signal[2 * t : 2 * t + 2, 2 * t : 2 * t + 2] = 0.5 * (blk + blk.T)
        c = rng.uniform(0.2, 1.0, 6)
        c /= c.sum()
        lab = optimal_labels(signal, c, 1)
        assert np.max(np.abs(lab[[0, 1, 4, 5]])) < 1e-12
        assert np.max(np.abs(lab[[2, 3]])) > 0

    def test_beats_uniform_and_random_labels(self):
        st = _two_task_stats(0.5)
        lab = optimal_labels(st.signal, st.proportions, 1)
        best = mtl_score_law(st.signal, st.proportions, st.ratio, lab)
        target_sep = best.separations[2, 3]
        uniform = mtl_score_law(
            st.signal, st.proportions, st.ratio, np.tile([-1.0, 1.0], 2)
        )
        assert uniform.separations[2, 3] <= target_sep + 1e-12
        rng = np.random.default_rng(42)
        for _ in range(100):
            y = lab + 0.3 * rng.standard_normal(4)
            law = mtl_score_law(st.signal, st.proportions, st.ratio, y)
            assert law.separations[2, 3] <= target_sep + 1e-9

    def test_rejects_odd_layout_and_bad_target(self):
        st = _single_task_stats(100)
        with pytest.raises(InputError):
            optimal_labels(st.signal, st.proportions, 1)
        with pytest.raises(InputError):
            optimal_labels(np.eye(3), np.full(3, 1 / 3), 0)


class TestOptimalError:
    def test_two_task_endpoints(self):
        st = _two_task_stats(1.0)
        assert_allclose(optimal_error(st.signal, st.proportions, st.ratio, 1), 0.16428, atol=5e-4)
        st = _two_task_stats(0.0)
        # an unrelated task cannot help: optimum falls back to single-task level
        assert_allclose(optimal_error(st.signal, st.proportions, st.ratio, 1), 0.23975, atol=5e-4)

    def test_no_signal_chance(self):
        assert_allclose(optimal_error(np.zeros((2, 2)), np.array([0.5, 0.5]), 0.1, 0), 0.5)

    def test_matches_law_at_optimum(self):
        st = _two_task_stats(0.5)
        lab = optimal_labels(st.signal, st.proportions, 1)
        law = mtl_score_law(st.signal, st.proportions, st.ratio, lab)
        direct = optimal_error(st.signal, st.proportions, st.ratio, 1)
        assert_allclose(direct, law.task_errors[1], atol=1e-12)


class TestSeparationGap:
    def test_plug_in_values(self):
        c = np.array([0.5, 0.5])
        absolute, relative = pca_spca_gap(4.0, 10.0, c)
        assert_allclose(absolute, 16.0 / 44.0)
        assert_allclose(relative, 0.1)

    def test_gap_vanishes_for_strong_signal(self):
        c = np.array([0.5, 0.5])
        absolute, relative = pca_spca_gap(1e6, 10.0, c)
        assert absolute < 1e-4
        assert relative < 1e-9

    def test_below_visibility_whole_separation_is_gap(self):
        c = np.array([0.5, 0.5])
        absolute, relative = pca_spca_gap(1.0, 10.0, c)  # ratio*delta^2 = 10 < 16
        assert relative == 1.0
        assert_allclose(absolute, 10.0 / 14.0)

    def test_consistent_with_score_laws(self):
        # gap formula equals the separation difference of the two laws
        st = _single_task_stats(100)
        pca = pca_score_law(st.signal, st.proportions, st.ratio, tau=1)
        spca = spca_score_law(st.signal, st.proportions, st.ratio)
        absolute, _ = pca_spca_gap(4.0, 10.0, st.proportions)
        gap = spca.separations[0, 1] - pca.separations[0, 1]
        assert_allclose(gap, absolute, atol=1e-10)

    def test_rejects_nonpositive_inputs(self):
        with pytest.raises(InputError):
            pca_spca_gap(0.0, 10.0, np.array([0.5, 0.5]))


class TestInputValidation:
    def test_asymmetric_signal_rejected(self):
        c = np.array([0.5, 0.5])
        bad = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(InputError):
            spca_score_law(bad, c, 0.1)

    def test_indefinite_signal_rejected(self):
        c = np.array([0.5, 0.5])
        with pytest.raises(InputError):
            pca_score_law(np.diag([1.0, -1.0]), c, 0.1)

    def test_bad_proportions_rejected(self):
        with pytest.raises(InputError):
            spca_score_law(np.eye(2), np.array([0.5, 0.6]), 0.1)
        with pytest.raises(InputError):
            spca_score_law(np.eye(2), np.array([1.5, -0.5]), 0.1)

    def test_bad_ratio_rejected(self):
        with pytest.raises(InputError):
            spca_score_law(np.eye(2), np.array([0.5, 0.5]), -1.0)
