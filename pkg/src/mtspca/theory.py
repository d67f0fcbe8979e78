"""Closed-form asymptotic predictions for projection-based classifiers.

In the large-dimensional regime (p and n growing together, p/n -> c0), the
projected score of a test point is asymptotically Gaussian with unit
variance, and its class-conditional means admit closed forms in the
sufficient statistic `signal` (see estimation module), the block proportions
c, and c0. These laws predict the classification error of each method
without any simulation, and conversely every constant here has been pinned
against a Monte-Carlo oracle of the corresponding empirical pipeline.

Conventions: blocks are indexed task-major class-minor; spikes are the
eigenvalues of `signal`; a spike is visible when it exceeds 1/sqrt(c0)
strictly (a tie sits exactly at the detectability edge, where the alignment
constant vanishes, and is treated as invisible). Score laws report, per
block, the mean vector of the projected score, pairwise squared separations,
and the Gaussian error Q(separation/2) of the midpoint rule. Binary laws
(one label score per block, two classes per task) additionally report the
per-task threshold and error of the averaged-mean test; the fitted rule
orients itself by the sign of the estimated mean difference, so its
predicted error uses the absolute separation and never exceeds 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import InputError
from .linalg import psd_sqrt, spd_solve, sym_eig

__all__ = [
    "qfunc",
    "SpectralSummary",
    "ScoreLaw",
    "phase_transition",
    "pca_score_law",
    "spca_score_law",
    "mtl_score_law",
    "optimal_labels",
    "optimal_error",
    "pca_spca_gap",
]


VIS_TOL = 1e-9


def qfunc(t):
    """Standard normal upper-tail probability Q(t), accurate to ~1e-15."""
    return 0.5 * erfc(np.asarray(t, dtype=float) / np.sqrt(2.0))


def _visible_spikes(spikes: np.ndarray, c0: float) -> np.ndarray:
    # strict threshold with a relative guard so a spike computed as
    # threshold + epsilon still counts as the (invisible) tie it is
    thr = 1.0 / np.sqrt(c0)
    return spikes > thr * (1.0 + VIS_TOL)


@dataclass(frozen=True)
class SpectralSummary:
    """Where the sample spectrum of X X^T / p lands for a given mixture.

    spikes: eigenvalues of `signal`, descending; visible: spike strictly
    above 1/sqrt(c0); sample_spikes: predicted isolated sample eigenvalue
    1 + 1/c0 + l + 1/(c0 l) for visible spikes, else the right bulk edge;
    bulk_edges: support edges (1 -+ sqrt(1/c0))^2 of the noise bulk.
    """

    spikes: np.ndarray
    visible: np.ndarray
    sample_spikes: np.ndarray
    bulk_edges: tuple[float, float]


@dataclass(frozen=True)
class ScoreLaw:
    """Asymptotic Gaussian law of projected scores, unit covariance.

    method: pca | spca | mtl-spca; means: (blocks, tau) score means;
    separations: pairwise squared mean distances; pair_errors:
    Q(sqrt(separation)/2), the midpoint-rule error for each class pair;
    thresholds / task_errors: averaged-mean test quantities for binary laws
    (None otherwise); degenerate: an eigenvalue gap in the underlying
    decomposition was below resolution, individual components not unique.
    """

    method: str
    means: np.ndarray
    separations: np.ndarray
    pair_errors: np.ndarray
    thresholds: np.ndarray | None = None
    task_errors: np.ndarray | None = None
    degenerate: bool = False

    @property
    def tau(self) -> int:
        return self.means.shape[1]


def _check_common(signal: np.ndarray, c: np.ndarray, c0: float):
    signal = np.asarray(signal, dtype=float)
    c = np.asarray(c, dtype=float)
    if signal.ndim != 2 or signal.shape[0] != signal.shape[1]:
        raise InputError(f"signal must be square, got shape {signal.shape}")
    if c.ndim != 1 or len(c) != signal.shape[0]:
        raise InputError(
            f"proportions length {c.shape} does not match signal order {signal.shape[0]}"
        )
    if np.any(c <= 0) or abs(c.sum() - 1.0) > 1e-6:
        raise InputError("proportions must be positive and sum to 1")
    if c0 <= 0:
        raise InputError(f"dimension ratio c0 must be positive, got {c0}")
    scale = max(1.0, float(np.max(np.abs(signal))))
    if float(np.max(np.abs(signal - signal.T))) > 1e-8 * scale:
        raise InputError("signal matrix must be symmetric")
    return signal, c, float(c0)


def _check_psd(signal: np.ndarray) -> None:
    w = np.linalg.eigvalsh(signal)
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    if w[0] < -1e-8 * scale:
        raise InputError(f"signal matrix must be PSD, min eigenvalue {w[0]:.3e}")


def _law_from_means(method, means, k, m, binary, degenerate):
    diff = means[:, None, :] - means[None, :, :]
    sep = np.sum(diff * diff, axis=2)
    pair_errors = qfunc(0.5 * np.sqrt(sep))
    thresholds = None
    task_errors = None
    if binary and m == 2 and means.shape[1] == 1:
        mv = means[:, 0]
        thresholds = np.array([0.5 * (mv[2 * t] + mv[2 * t + 1]) for t in range(k)])
        task_errors = np.array(
            [float(qfunc(0.5 * abs(mv[2 * t] - mv[2 * t + 1]))) for t in range(k)]
        )
    return ScoreLaw(
        method=method,
        means=means,
        separations=sep,
        pair_errors=pair_errors,
        thresholds=thresholds,
        task_errors=task_errors,
        degenerate=degenerate,
    )


def phase_transition(signal: np.ndarray, c0: float) -> SpectralSummary:
    """Visibility of each spike and where its sample eigenvalue lands."""
    signal = np.asarray(signal, dtype=float)
    if c0 <= 0:
        raise InputError(f"dimension ratio c0 must be positive, got {c0}")
    _check_psd(signal)
    spikes = sym_eig(signal).values
    edge_lo = (1.0 - np.sqrt(1.0 / c0)) ** 2
    edge_hi = (1.0 + np.sqrt(1.0 / c0)) ** 2
    visible = _visible_spikes(spikes, c0)
    sample = np.full_like(spikes, edge_hi)
    vis = visible.nonzero()[0]
    sample[vis] = 1.0 + 1.0 / c0 + spikes[vis] + 1.0 / (c0 * spikes[vis])
    return SpectralSummary(
        spikes=spikes, visible=visible, sample_spikes=sample, bulk_edges=(edge_lo, edge_hi)
    )


def pca_score_law(
    signal: np.ndarray, c: np.ndarray, c0: float, tau: int | None = None
) -> ScoreLaw:
    """Score law of projection on the top-tau sample eigenvectors of XX^T/p.

    Component i carries signal only when spike i is visible; its mean for
    block a is then

        sqrt((c0 l_i^2 - 1) / (l_i^2 (l_i + 1))) * (u_i . signal Dc^{-1/2} e_a),

    with (l_i, u_i) the i-th eigenpair of `signal`. Invisible components have
    mean 0 (pure noise directions). tau defaults to the visible-spike count.
    """
    signal, c, c0 = _check_common(signal, c, c0)
    _check_psd(signal)
    dec = sym_eig(signal)
    visible = _visible_spikes(dec.values, c0)
    if tau is None:
        tau = int(np.count_nonzero(visible))
    if not 0 <= tau <= signal.shape[0]:
        raise InputError(f"tau={tau} outside 0..{signal.shape[0]}")
    nb = signal.shape[0]
    inv_root_c = 1.0 / np.sqrt(c)
    means = np.zeros((nb, tau))
    for i in range(tau):
        l = dec.values[i]
        if not visible[i]:
            continue
        const = np.sqrt((c0 * l * l - 1.0) / (l * l * (l + 1.0)))
        means[:, i] = const * (dec.vectors[:, i] @ signal) * inv_root_c
    k, m = _infer_binary_shape(nb)
    return _law_from_means("pca", means, k, m, binary=False, degenerate=dec.degenerate)


def _infer_binary_shape(nb: int) -> tuple[int, int]:
    # blocks split evenly into tasks of two classes when nb is even; the
    # multi-dim laws only use (k, m) to decide whether thresholds make sense
    if nb % 2 == 0:
        return nb // 2, 2
    return nb, 1


def spca_score_law(signal: np.ndarray, c: np.ndarray, c0: float) -> ScoreLaw:
    """Score law of the label-guided projection (all components).

    Components are the eigenpairs (l~_i, v_i) of
    K = Dc^{1/2} signal Dc^{1/2} + Dc; block a's mean on component i is
    sqrt(c0 / l~_i) * (v_i . Dc^{1/2} signal Dc^{-1/2} e_a). Components
    beyond the rank of `signal` have zero mean automatically.
    """
    signal, c, c0 = _check_common(signal, c, c0)
    _check_psd(signal)
    root = np.sqrt(c)
    kmat = signal * root[:, None] * root[None, :] + np.diag(c)
    dec = sym_eig(0.5 * (kmat + kmat.T))
    nb = signal.shape[0]
    carrier = (signal * root[:, None]) / root[None, :]
    means = np.empty((nb, nb))
    for i in range(nb):
        means[:, i] = np.sqrt(c0 / dec.values[i]) * (dec.vectors[:, i] @ carrier)
    k, m = _infer_binary_shape(nb)
    return _law_from_means("spca", means, k, m, binary=False, degenerate=dec.degenerate)


def _mtl_vector_law(
    signal: np.ndarray, c: np.ndarray, c0: float, labels: np.ndarray
) -> ScoreLaw:
    """Vector-label branch of mtl_score_law, inputs assumed validated."""
    root = np.sqrt(c)
    kmat = signal * root[:, None] * root[None, :] + np.diag(c)
    kmat = 0.5 * (kmat + kmat.T)
    carrier = (signal * root[:, None]) / root[None, :]
    denom = labels @ kmat @ labels
    if denom <= 0:
        raise InputError("labels produce a degenerate score direction")
    means = (np.sqrt(c0) * (labels @ carrier) / np.sqrt(denom))[:, None]
    nb = signal.shape[0]
    if nb % 2:
        raise InputError("binary law needs an even number of blocks")
    return _law_from_means("mtl-spca", means, nb // 2, 2, binary=True, degenerate=False)


def mtl_score_law(
    signal: np.ndarray, c: np.ndarray, c0: float, labels: np.ndarray
) -> ScoreLaw:
    """Score law of the matched filter built from per-block label scores.

    A label vector (one score per block) gives the scalar score whose block-a
    mean is

        sqrt(c0) * (labels . Dc^{1/2} signal Dc^{-1/2} e_a) / sqrt(labels . K labels),

    plus the averaged-mean threshold and error per task (two classes per
    task). A label matrix (blocks x r) gives the r-dimensional law through
    the eigenpairs of (Y Y^T)^{1/2} K (Y Y^T)^{1/2}; the vector case is the
    r=1 special case of the same law. Invariant under labels -> a * labels.
    """
    signal, c, c0 = _check_common(signal, c, c0)
    _check_psd(signal)
    labels = np.asarray(labels, dtype=float)
    if np.linalg.norm(labels) == 0.0:
        raise InputError("label vector must be nonzero")
    nb = signal.shape[0]
    if labels.shape[0] != nb:
        raise InputError(
            f"labels have {labels.shape[0]} rows, signal order is {nb}"
        )
    if labels.ndim == 1:
        return _mtl_vector_law(signal, c, c0, labels)
    root = np.sqrt(c)
    kmat = signal * root[:, None] * root[None, :] + np.diag(c)
    kmat = 0.5 * (kmat + kmat.T)
    carrier = (signal * root[:, None]) / root[None, :]
    yy = labels @ labels.T
    s = psd_sqrt(yy)
    comp = s @ kmat @ s
    dec = sym_eig(0.5 * (comp + comp.T))
    keep = dec.values > 1e-12 * max(1.0, dec.values[0])
    idx = keep.nonzero()[0]
    means = np.empty((nb, len(idx)))
    base = s @ carrier
    for out_i, i in enumerate(idx):
        means[:, out_i] = np.sqrt(c0 / dec.values[i]) * (dec.vectors[:, i] @ base)
    k, m = _infer_binary_shape(nb)
    return _law_from_means("mtl-spca", means, k, m, binary=False, degenerate=dec.degenerate)


def _optimal_labels_core(signal: np.ndarray, c: np.ndarray, target: int) -> np.ndarray:
    """Closed-form optimal labels, inputs assumed validated."""
    nb = signal.shape[0]
    de = np.zeros(nb)
    de[2 * target] = 1.0
    de[2 * target + 1] = -1.0
    inv_root_c = 1.0 / np.sqrt(c)
    rhs = signal @ (inv_root_c * de)
    return inv_root_c * spd_solve(signal + np.eye(nb), rhs)


def optimal_labels(signal: np.ndarray, c: np.ndarray, target: int) -> np.ndarray:
    """Label scores maximizing the target task's score separation.

    Closed form Dc^{-1/2} (signal + I)^{-1} signal Dc^{-1/2} (e_t1 - e_t2)
    for a binary layout; returned unnormalized (the score law is invariant
    to positive scaling). Entries for tasks uncorrelated with the target
    (block-diagonal signal) are exactly zero.
    """
    signal = np.asarray(signal, dtype=float)
    c = np.asarray(c, dtype=float)
    nb = signal.shape[0]
    if nb % 2:
        raise InputError("optimal labels need a binary layout (two classes per task)")
    k = nb // 2
    if not 0 <= target < k:
        raise InputError(f"target task {target} outside 0..{k - 1}")
    _check_common(signal, c, 1.0)
    _check_psd(signal)
    return _optimal_labels_core(signal, c, target)


def optimal_error(signal: np.ndarray, c: np.ndarray, c0: float, target: int) -> float:
    """Error of the averaged-mean test at the optimal labels.

    Q(0.5 * sqrt(c0 * de . H de)) with
    H = Dc^{-1/2} signal (signal + I)^{-1} signal Dc^{-1/2} and
    de = e_t1 - e_t2; equals the mtl_score_law task error at
    optimal_labels to machine precision.
    """
    signal, c, c0 = _check_common(signal, c, c0)
    _check_psd(signal)
    nb = signal.shape[0]
    if nb % 2:
        raise InputError("optimal error needs a binary layout (two classes per task)")
    k = nb // 2
    if not 0 <= target < k:
        raise InputError(f"target task {target} outside 0..{k - 1}")
    de = np.zeros(nb)
    de[2 * target] = 1.0
    de[2 * target + 1] = -1.0
    v = de / np.sqrt(c)
    quad = (signal @ v) @ spd_solve(signal + np.eye(nb), signal @ v)
    return float(qfunc(0.5 * np.sqrt(c0 * quad)))


def pca_spca_gap(delta_sq: float, ratio: float, c: np.ndarray) -> tuple[float, float]:
    """Separation advantage of the label-guided projection over plain PCA.

    Binary single task with symmetric class means (+-mu, |mu_1 - mu_2|^2 =
    delta_sq) and sample ratio n/p: the squared score separations are
    ratio * delta_sq^2 / (ratio * delta_sq + 4) for SPCA and that minus the
    returned absolute gap for PCA. The closed forms

        absolute = 16 / (ratio * delta_sq + 4)
        relative = 16 / (ratio * delta_sq^2)

    hold whenever the PCA spike is visible (ratio * delta_sq^2 >= 16); the
    class proportions cancel under symmetric means and are only validated.
    Below visibility PCA carries no signal and the whole SPCA separation is
    the gap (relative gap 1).
    """
    c = np.asarray(c, dtype=float)
    if delta_sq <= 0 or ratio <= 0:
        raise InputError("delta_sq and ratio must be positive")
    if np.any(c <= 0) or abs(c.sum() - 1.0) > 1e-6:
        raise InputError("proportions must be positive and sum to 1")
    spca_sep = ratio * delta_sq * delta_sq / (ratio * delta_sq + 4.0)
    if ratio * delta_sq * delta_sq < 16.0:
        return float(spca_sep), 1.0
    absolute = 16.0 / (ratio * delta_sq + 4.0)
    relative = 16.0 / (ratio * delta_sq * delta_sq)
    return float(absolute), float(relative)
