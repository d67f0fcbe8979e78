"""Sufficient statistics: exact population values, the split-half estimator,
and the fused one-vs-all statistics pass."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

import mtspca
from mtspca.data import (
    MixtureSpec,
    TaskDataset,
    TaskLayout,
    expand_labels,
    one_vs_all_view,
    zscore_maps,
    zscore_per_task,
)
from mtspca.errors import InputError
from mtspca.estimation import estimate_stats, exact_stats, one_vs_all_stats


def _balanced_binary_spec(p=100, per=500, beta=1.0):
    return mtspca.binary_transfer_mixture(p, np.array([[per, per]]), [beta])


class TestExactStats:
    def test_balanced_single_task_population_values(self):
        st = exact_stats(_balanced_binary_spec())
        assert_allclose(st.proportions, [0.5, 0.5])
        assert_allclose(st.ratio, 0.1)
        assert_allclose(st.gram, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-12)
        assert_allclose(st.signal, 5.0 * np.array([[1.0, -1.0], [-1.0, 1.0]]), atol=1e-12)
        assert_allclose(np.linalg.eigvalsh(st.signal), [0.0, 10.0], atol=1e-12)

    def test_two_task_ratio(self):
        spec = mtspca.binary_transfer_mixture(
            100, np.array([[1000, 1000], [50, 50]]), [1.0, 0.5]
        )
        assert_allclose(exact_stats(spec).ratio, 100.0 / 2100.0)

    def test_signal_symmetric_psd(self):
        rng = np.random.default_rng(30)
        means = rng.standard_normal((2, 3, 8))
        spec = MixtureSpec(layout=TaskLayout(np.full((2, 3), 5)), means=means)
        st = exact_stats(spec)
        assert_allclose(st.signal, st.signal.T)
        assert np.linalg.eigvalsh(st.signal)[0] > -1e-12


class TestEstimateStats:
    def test_noiseless_gram_is_exact(self):
        # constant columns per class: sample means and half means all equal mu
        spec = mtspca.binary_transfer_mixture(6, np.array([[4, 4]]), [0.7], scale=1.3)
        x = np.hstack(
            [np.tile(spec.means[0, 0][:, None], 4), np.tile(spec.means[0, 1][:, None], 4)]
        )
        st = estimate_stats(TaskDataset(x=x, layout=spec.layout))
        assert_allclose(st.gram, exact_stats(spec).gram, atol=1e-12)

    def test_cross_entry_concentrates(self):
        spec = _balanced_binary_spec()
        devs = [
            abs(estimate_stats(mtspca.synth_gaussian(spec, s)).gram[0, 1] + 1.0)
            for s in range(20)
        ]
        assert max(devs) < 0.15

    def test_diagonal_split_half_removes_noise_bias(self):
        # the naive |mean|^2 estimate carries a p/n_a bias; the split kills it
        spec = _balanced_binary_spec(p=200, per=400)
        diag_err, naive_err = [], []
        for s in range(10):
            ds = mtspca.synth_gaussian(spec, s)
            st = estimate_stats(ds)
            diag_err.append(abs(st.gram[0, 0] - 1.0))
            mhat = ds.block(0, 0).mean(axis=1)
            naive_err.append(abs(mhat @ mhat - 1.0))
        assert np.mean(diag_err) < 0.2
        assert np.mean(naive_err) > 0.4  # bias p/n_a = 0.5 dominates

    def test_rms_rate_improves_with_n(self):
        spec_small = _balanced_binary_spec(p=50, per=250)
        spec_large = _balanced_binary_spec(p=50, per=1000)
        ex = np.array([[1.0, -1.0], [-1.0, 1.0]])

        def rms(spec):
            out = []
            for s in range(10):
                est = estimate_stats(mtspca.synth_gaussian(spec, s)).gram
                out.append(np.sqrt(np.mean((est - ex) ** 2)))
            return float(np.mean(out))

        ratio = rms(spec_small) / rms(spec_large)
        # quadrupling n should halve the error, within factor 1.5
        assert 2.0 / 1.5 < ratio < 2.0 * 1.5

    def test_zero_mean_data_gives_small_signal(self):
        layout = TaskLayout(np.array([[400, 400]]))
        spec = MixtureSpec(layout=layout, means=np.zeros((1, 2, 40)))
        st = estimate_stats(mtspca.synth_gaussian(spec, 31))
        assert np.max(np.abs(st.signal)) < 0.5

    def test_clipping_flagged_and_result_psd(self):
        spec = mtspca.binary_transfer_mixture(
            30, np.array([[4, 4], [4, 4]]), [1.0, 0.3], scale=0.5
        )
        st = estimate_stats(mtspca.synth_gaussian(spec, 0))
        assert st.clipped
        assert st.min_eig < 0.0
        assert np.linalg.eigvalsh(st.signal)[0] > -1e-10
        # gram keeps the raw (unclipped) estimate
        assert np.linalg.eigvalsh(
            st.gram * np.sqrt(np.outer(st.proportions, st.proportions)) / st.ratio
        )[0] < 0.0

    def test_psd_after_clipping_always(self):
        spec = mtspca.binary_transfer_mixture(
            25, np.array([[3, 3], [3, 3], [3, 3]]), [1.0, 0.5, 0.1], scale=0.4
        )
        for s in range(15):
            st = estimate_stats(mtspca.synth_gaussian(spec, s))
            assert np.linalg.eigvalsh(st.signal)[0] > -1e-10

    def test_shuffled_split_matches_on_noiseless_data(self):
        spec = mtspca.binary_transfer_mixture(6, np.array([[4, 4]]), [0.7])
        x = np.hstack(
            [np.tile(spec.means[0, 0][:, None], 4), np.tile(spec.means[0, 1][:, None], 4)]
        )
        ds = TaskDataset(x=x, layout=spec.layout)
        det = estimate_stats(ds)
        shuf = estimate_stats(ds, rng=np.random.default_rng(32))
        assert_allclose(shuf.gram, det.gram, atol=1e-12)

    def test_requires_two_samples_per_block(self):
        layout = TaskLayout(np.array([[1, 5]]))
        ds = TaskDataset(x=np.zeros((3, 6)), layout=layout)
        with pytest.raises(InputError):
            estimate_stats(ds)


class TestOneVsAllStats:
    """The fused pass must reproduce estimate_stats on each regrouped view."""

    def _dataset(self, seed=33, p=25):
        rng = np.random.default_rng(seed)
        means = rng.standard_normal((3, 4, p)) * 1.5
        counts = np.array([[9, 14, 7, 31], [12, 5, 22, 8], [6, 19, 3, 10]])
        spec = MixtureSpec(layout=TaskLayout(counts), means=means)
        return mtspca.synth_gaussian(spec, rng)

    def test_matches_per_view_estimates(self):
        ds = self._dataset()
        stats_list, block_sums = one_vs_all_stats(ds)
        assert len(stats_list) == 4
        for cls in range(4):
            ref = estimate_stats(one_vs_all_view(ds, cls))
            st = stats_list[cls]
            assert np.array_equal(st.layout.counts, ref.layout.counts)
            assert_allclose(st.proportions, ref.proportions)
            assert_allclose(st.gram, ref.gram, atol=1e-10)
            assert_allclose(st.signal, ref.signal, atol=1e-10)

    def test_block_sums_reproduce_label_filters(self):
        ds = self._dataset(seed=34)
        _, block_sums = one_vs_all_stats(ds)
        layout = ds.layout
        rng = np.random.default_rng(35)
        per_block = rng.standard_normal(layout.n_blocks)
        v_ref = ds.x @ expand_labels(layout, per_block)
        assert_allclose(block_sums @ per_block, v_ref, atol=1e-10 * np.abs(v_ref).max())

    def test_affine_maps_match_materialized_zscore(self):
        ds = self._dataset(seed=36)
        zds, zmaps = zscore_per_task(ds)
        fused, _ = one_vs_all_stats(ds, maps=zmaps)
        materialized, _ = one_vs_all_stats(zds)
        for cls in range(4):
            assert_allclose(fused[cls].gram, materialized[cls].gram, atol=1e-9)
            assert_allclose(fused[cls].signal, materialized[cls].signal, atol=1e-9)
            ref = estimate_stats(one_vs_all_view(zds, cls))
            assert_allclose(fused[cls].gram, ref.gram, atol=1e-9)

    def test_binary_input_head_zero_is_plain_estimate(self):
        rng = np.random.default_rng(37)
        spec = mtspca.binary_transfer_mixture(10, np.array([[6, 8], [5, 7]]), [1.0, 0.4])
        ds = mtspca.synth_gaussian(spec, rng)
        stats_list, _ = one_vs_all_stats(ds)
        ref = estimate_stats(ds)
        assert_allclose(stats_list[0].gram, ref.gram, atol=1e-10)

    def test_rejects_single_class(self):
        ds = TaskDataset(x=np.zeros((3, 4)), layout=TaskLayout(np.array([[4]])))
        with pytest.raises(InputError):
            one_vs_all_stats(ds)

    def test_rejects_undersized_blocks(self):
        ds = TaskDataset(x=np.zeros((3, 4)), layout=TaskLayout(np.array([[1, 3]])))
        with pytest.raises(InputError):
            one_vs_all_stats(ds)

    def test_wrong_map_count_rejected(self):
        ds = self._dataset(seed=38)
        maps = zscore_maps(ds)
        with pytest.raises(InputError):
            one_vs_all_stats(ds, maps=maps[:1])
