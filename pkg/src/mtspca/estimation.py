"""Sufficient statistics of the task mixture, exact and estimated.

Everything downstream (score laws, label design, thresholds) consumes only
three quantities: the per-block sample proportions c, the dimension-to-sample
ratio c0 = p/n, and a normalized matrix of inner products between class
means,

    signal = (1/c0) * Dc^{1/2} G Dc^{1/2},   G[a, b] = mu_a . mu_b,

with Dc = diag(c) and blocks indexed task-major, class-minor. `signal` is
PSD by construction and is the sufficient statistic of the whole asymptotic
theory.

The consistent estimator from data uses inner products of class sample
means; the diagonal would be biased upward by the noise term p/n_a, so it is
estimated by splitting each class in half and taking the inner product of
the two half means. The estimated `signal` is clipped to the PSD cone
(negative eigenvalues to zero) and the clip is recorded, not silent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MixtureSpec, TaskDataset, TaskLayout
from .errors import InputError

__all__ = [
    "SufficientStats",
    "exact_stats",
    "estimate_stats",
    "one_vs_all_stats",
]


@dataclass(frozen=True)
class SufficientStats:
    """Inputs of the asymptotic theory for one task mixture.

    layout: block structure; dim: feature dimension p; ratio: c0 = p/n;
    proportions: c_tj flattened in block order; gram: class-mean inner
    products G (estimated or exact); signal: normalized PSD statistic above;
    clipped: True when PSD clipping changed the estimate; min_eig: smallest
    eigenvalue of `signal` before clipping.
    """

    layout: TaskLayout
    dim: int
    ratio: float
    proportions: np.ndarray
    gram: np.ndarray
    signal: np.ndarray
    clipped: bool = False
    min_eig: float = 0.0


def _build_signal(gram: np.ndarray, c: np.ndarray, c0: float) -> np.ndarray:
    root = np.sqrt(c)
    out = (gram * root[:, None] * root[None, :]) / c0
    return 0.5 * (out + out.T)


def exact_stats(spec: MixtureSpec) -> SufficientStats:
    """Population statistics of a known Gaussian mixture."""
    layout = spec.layout
    means = spec.flat_means()
    gram = means @ means.T
    gram = 0.5 * (gram + gram.T)
    c = layout.proportions()
    c0 = spec.p / layout.n
    signal = _build_signal(gram, c, c0)
    min_eig = float(np.linalg.eigvalsh(signal)[0])
    return SufficientStats(
        layout=layout,
        dim=spec.p,
        ratio=c0,
        proportions=c,
        gram=gram,
        signal=signal,
        clipped=False,
        min_eig=min_eig,
    )


def estimate_stats(
    ds: TaskDataset, rng: np.random.Generator | None = None
) -> SufficientStats:
    """Consistent statistics from one labeled dataset.

    Off-diagonal G entries are inner products of full class sample means;
    diagonal entries use the split-half estimator (first floor(n_a/2) columns
    against the rest, positional and deterministic unless an rng is passed to
    shuffle each class before splitting). Requires >= 2 samples per block.
    """
    layout = ds.layout
    flat = layout.counts.ravel()
    if np.any(flat < 2):
        raise InputError("split-half estimator needs >= 2 samples per (task, class)")
    nb = layout.n_blocks
    p = ds.p
    if rng is None:
        # one reduceat pass over half-block boundaries covers every block
        halves = flat // 2
        offs = np.concatenate(([0], np.cumsum(flat)))[:-1]
        starts = np.empty(2 * nb, dtype=np.intp)
        starts[0::2] = offs
        starts[1::2] = offs + halves
        sums = np.add.reduceat(ds.x, starts, axis=1)
        first = sums[:, 0::2] / halves
        second = sums[:, 1::2] / (flat - halves)
        means = (sums[:, 0::2] + sums[:, 1::2]) / flat
        diag = np.einsum("pa,pa->a", first, second)
    else:
        means = np.empty((p, nb))
        diag = np.empty(nb)
        for t in range(layout.k):
            for j in range(layout.m):
                a = layout.block_index(t, j)
                block = ds.block(t, j)
                block = block[:, rng.permutation(block.shape[1])]
                means[:, a] = block.mean(axis=1)
                h = block.shape[1] // 2
                diag[a] = block[:, :h].mean(axis=1) @ block[:, h:].mean(axis=1)
    return _finish_stats(layout, p, means, diag)


def _finish_stats(
    layout: TaskLayout, p: int, means: np.ndarray, diag: np.ndarray
) -> SufficientStats:
    """Assemble SufficientStats from (p, n_blocks) sample means and the
    split-half diagonal, with PSD clipping of the signal."""
    nb = layout.n_blocks
    gram = means.T @ means
    gram = 0.5 * (gram + gram.T)
    gram[np.diag_indices(nb)] = diag
    c = layout.proportions()
    c0 = p / layout.n
    raw = _build_signal(gram, c, c0)
    # raw is symmetric by construction; only the clip needs the eigenpairs
    w, vv = np.linalg.eigh(raw)
    min_eig = float(w[0])
    clipped = min_eig < 0.0
    if clipped:
        pos = np.clip(w, 0.0, None)
        raw = (vv * pos) @ vv.T
        raw = 0.5 * (raw + raw.T)
    return SufficientStats(
        layout=layout,
        dim=p,
        ratio=c0,
        proportions=c,
        gram=gram,
        signal=raw,
        clipped=clipped,
        min_eig=min_eig,
    )


def one_vs_all_stats(
    ds: TaskDataset, maps: "list | None" = None
) -> tuple[list[SufficientStats], np.ndarray]:
    """Statistics of every one-vs-all regrouping, in one pass over the data.

    Returns (stats, block_sums): stats[cls] matches
    estimate_stats(one_vs_all_view(ds, cls)) up to summation order, and
    block_sums is the (p, n_blocks) matrix of per-block column sums in the
    original block order, from which any label filter X y with block-constant
    y is block_sums @ y_per_block.

    When `maps` holds one per-task affine map (see ZScoreMap), all sums are
    of the transformed data, computed from raw sums without materializing
    the transformed matrix: sum((x - shift)/scale) = (sum(x) - w*shift)/scale
    for a segment of w columns inside one task.

    The merged rest class of head cls keeps samples in original column order,
    so its split-half diagonal needs partial sums at one interior cut per
    (head, task). All cuts, block starts, and block midpoints become segment
    boundaries of a single reduceat; every required sum is then a contiguous
    range of segments.
    """
    layout = ds.layout
    k, m = layout.k, layout.m
    flat = layout.counts.ravel()
    if np.any(flat < 2):
        raise InputError("split-half estimator needs >= 2 samples per (task, class)")
    if m < 2:
        raise InputError("one-vs-all regrouping needs at least two classes")
    nb = layout.n_blocks
    p = ds.p
    n = layout.n
    offs = np.concatenate(([0], np.cumsum(flat)))
    task_n = layout.counts.sum(axis=1)

    cut_abs = np.empty((m, k), dtype=np.intp)
    for cls in range(m):
        for t in range(k):
            rest_half = (task_n[t] - flat[t * m + cls]) // 2
            acc = 0
            for j in range(m):
                if j == cls:
                    continue
                b = t * m + j
                if acc + flat[b] >= rest_half:
                    cut_abs[cls, t] = offs[b] + (rest_half - acc)
                    break
                acc += flat[b]

    halves = flat // 2
    bounds = np.unique(
        np.concatenate([offs, offs[:-1] + halves, cut_abs.ravel()])
    )
    starts = bounds[:-1] if bounds[-1] == n else bounds
    seg = np.add.reduceat(ds.x, starts, axis=1)
    edges = np.append(starts, n)
    # every queried range endpoint is an edge by construction
    epos = {int(e): i for i, e in enumerate(edges)}
    if maps is not None:
        if len(maps) != k:
            raise InputError(f"{len(maps)} affine maps for {k} tasks")
        widths = np.diff(edges)
        for t, zm in enumerate(maps):
            lo = epos[int(offs[t * m])]
            hi = epos[int(offs[(t + 1) * m])]
            seg[:, lo:hi] = (
                seg[:, lo:hi] - widths[lo:hi] * zm.shift[:, None]
            ) / zm.scale[:, None]
    cum = np.zeros((p, len(starts) + 1))
    np.cumsum(seg, axis=1, out=cum[:, 1:])

    def range_sum(a: int, b: int) -> np.ndarray:
        return cum[:, epos[int(b)]] - cum[:, epos[int(a)]]

    off_cum = cum[:, [epos[int(v)] for v in offs]]  # (p, nb + 1)
    half_cum = cum[:, [epos[int(offs[b] + halves[b])] for b in range(nb)]]
    block_sums = off_cum[:, 1:] - off_cum[:, :-1]
    first = (half_cum - off_cum[:, :-1]) / halves
    second = (off_cum[:, 1:] - half_cum) / (flat - halves)
    diag_own = np.einsum("pa,pa->a", first, second)

    out: list[SufficientStats] = []
    for cls in range(m):
        counts_view = np.empty((k, 2), dtype=int)
        means = np.empty((p, 2 * k))
        diag = np.empty(2 * k)
        for t in range(k):
            b = t * m + cls
            n0 = flat[b]
            n1 = task_n[t] - n0
            counts_view[t] = (n0, n1)
            target_sum = block_sums[:, b]
            rest_sum = range_sum(offs[t * m], offs[(t + 1) * m]) - target_sum
            means[:, 2 * t] = target_sum / n0
            means[:, 2 * t + 1] = rest_sum / n1
            diag[2 * t] = diag_own[b]
            rh = n1 // 2
            cut = int(cut_abs[cls, t])
            first = range_sum(offs[t * m], cut)
            if offs[b] < cut:
                first = first - target_sum
            second = rest_sum - first
            diag[2 * t + 1] = (first / rh) @ (second / (n1 - rh))
        out.append(_finish_stats(TaskLayout(counts_view), p, means, diag))
    return out, block_sums
