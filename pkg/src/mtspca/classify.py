"""Trainable classifiers built on the projection score laws.

Four fit paths share one model container:

- fit_pca: project on the top sample eigenvectors of XX^T/p, classify by
  nearest centroid among plug-in theory centroids (empirical projections as
  fallback and diagnostic).
- fit_spca_binary: the scalar matched filter x -> y^T X^T x / |Xy| for a
  given per-block label vector, thresholded at the midpoint of the two
  plug-in class score means per task (the averaged-mean test).
- fit_mtl_spca_binary: same filter with the closed-form optimal labels for a
  chosen target task.
- fit_algorithm1: multi-class one-vs-all. Features are z-scored per task;
  each class gets a binary head (that class against the rest merged) with
  its own optimal labels; prediction takes the argmax of the head scores
  after subtracting each head's own plug-in target-class mean (centering
  removes per-head bias).

Class predictions are 0-based indices; ties break toward the smaller class.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import (
    TaskDataset,
    TaskLayout,
    ZScoreMap,
    expand_labels,
    zscore_maps,
    zscore_per_task,
)
from .errors import InputError, NumericalError
from .estimation import SufficientStats, estimate_stats, one_vs_all_stats
from .linalg import sym_eig, top_subspace
from .theory import (
    _mtl_vector_law,
    _optimal_labels_core,
    mtl_score_law,
    optimal_labels,
    pca_score_law,
    phase_transition,
)

__all__ = [
    "Projector",
    "FittedModel",
    "fit_pca",
    "fit_spca_binary",
    "fit_mtl_spca_binary",
    "fit_algorithm1",
    "naive_labels",
    "predict",
    "predict_scores",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class Projector:
    """Orthonormal projection basis with its construction tag."""

    basis: np.ndarray
    kind: str  # pca | spca | mtl-spca

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2:
            raise InputError(f"projector basis must be 2-D, got {basis.shape}")
        if basis.shape[1]:
            g = basis.T @ basis
            if np.max(np.abs(g - np.eye(basis.shape[1]))) > 1e-10:
                raise NumericalError("projector columns are not orthonormal")
        object.__setattr__(self, "basis", basis)

    @property
    def tau(self) -> int:
        return self.basis.shape[1]


@dataclass
class FittedModel:
    """Everything predict() needs, plus fit-time diagnostics.

    Populated fields depend on kind: pca uses projector/centroids,
    spca-binary uses projector (one unit column), labels, score_means,
    thresholds, one-vs-all uses the ova_* fields and the per-task z-score
    maps. stats carries the estimated statistics for inspection; it is not
    serialized (load_model returns stats=None).
    """

    kind: str
    layout: TaskLayout
    target_task: int
    stats: SufficientStats | None = None
    projector: Projector | None = None
    centroids: np.ndarray | None = None
    centroids_empirical: np.ndarray | None = None
    centroids_source: str = "plugin"
    chance_default: bool = False
    labels: np.ndarray | None = None
    score_means: np.ndarray | None = None
    thresholds: np.ndarray | None = None
    predicted_errors: np.ndarray | None = None
    normalizers: np.ndarray | None = None
    ova_directions: np.ndarray | None = None
    ova_labels: np.ndarray | None = None
    ova_centers: np.ndarray | None = None
    zmaps: list[ZScoreMap] | None = None


def naive_labels(layout: TaskLayout) -> np.ndarray:
    """Uniform -1/+1 label scores: -1 for each task's first class, +1 for
    the second. The multi-task filter with these labels ignores how related
    the tasks actually are."""
    if layout.m != 2:
        raise InputError("naive labels need a binary layout")
    out = np.tile([-1.0, 1.0], layout.k)
    return out


def _class_means(ds: TaskDataset) -> np.ndarray:
    layout = ds.layout
    out = np.empty((ds.p, layout.n_blocks))
    for t in range(layout.k):
        for j in range(layout.m):
            out[:, layout.block_index(t, j)] = ds.block(t, j).mean(axis=1)
    return out


def fit_pca(ds: TaskDataset, target_task: int = 0, tau: int | None = None) -> FittedModel:
    """Nearest-centroid classifier on the top-tau PCA directions.

    tau defaults to the number of estimated visible spikes. When that count
    is zero the sample eigenvectors are asymptotically pure noise; the model
    then warns and defaults to chance (it always predicts the first class).
    Sample eigenvector signs are aligned against the plug-in mean directions
    so the theory centroids apply; if the plug-in centroids are degenerate
    the empirical projected class means take over.
    """
    layout = ds.layout
    if not 0 <= target_task < layout.k:
        raise InputError(f"target task {target_task} outside 0..{layout.k - 1}")
    stats = estimate_stats(ds)
    summary = phase_transition(stats.signal, stats.ratio)
    n_visible = int(np.count_nonzero(summary.visible))
    if tau is None:
        tau = n_visible
    if tau > min(ds.p, layout.n):
        raise InputError(f"tau={tau} exceeds min(p, n)")
    m = layout.m
    if tau == 0:
        warnings.warn(
            "no visible spike: PCA directions carry no signal, defaulting to chance"
        )
        return FittedModel(
            kind="pca",
            layout=layout,
            target_task=target_task,
            stats=stats,
            projector=Projector(basis=np.zeros((ds.p, 0)), kind="pca"),
            centroids=np.zeros((m, 0)),
            centroids_empirical=np.zeros((m, 0)),
            chance_default=True,
        )
    dec = top_subspace(ds.x, tau)
    basis = dec.vectors.copy()
    # align sample eigenvector signs with the estimated signal directions
    means = _class_means(ds)
    ubar = sym_eig(stats.signal).vectors
    root_c = np.sqrt(stats.proportions)
    for i in range(min(tau, ubar.shape[1])):
        w = means @ (root_c * ubar[:, i])
        if basis[:, i] @ w < 0:
            basis[:, i] = -basis[:, i]
    nb = layout.n_blocks
    law = pca_score_law(stats.signal, stats.proportions, stats.ratio, min(tau, nb))
    rows = [layout.block_index(target_task, j) for j in range(m)]
    centroids = law.means[rows, :]
    if tau > nb:
        # components beyond the block count are pure noise, zero mean
        centroids = np.hstack([centroids, np.zeros((m, tau - nb))])
    centroids_empirical = (basis.T @ means).T[rows, :]
    source = "plugin"
    if np.allclose(centroids - centroids[0], 0.0):
        # all plug-in centroids coincide, no usable signal in them
        centroids = centroids_empirical
        source = "empirical"
    return FittedModel(
        kind="pca",
        layout=layout,
        target_task=target_task,
        stats=stats,
        projector=Projector(basis=basis, kind="pca"),
        centroids=centroids,
        centroids_empirical=centroids_empirical,
        centroids_source=source,
    )


def _fit_binary(
    ds: TaskDataset,
    labels: np.ndarray,
    target_task: int,
    stats: SufficientStats,
    kind: str,
) -> FittedModel:
    layout = ds.layout
    law = mtl_score_law(stats.signal, stats.proportions, stats.ratio, labels)
    y = expand_labels(layout, labels)
    v = ds.x @ y
    norm = float(np.linalg.norm(v))
    if norm <= 0:
        raise NumericalError("degenerate direction: X y = 0 for the given labels")
    return FittedModel(
        kind="spca-binary",
        layout=layout,
        target_task=target_task,
        stats=stats,
        projector=Projector(basis=(v / norm)[:, None], kind=kind),
        labels=np.asarray(labels, dtype=float),
        score_means=law.means[:, 0],
        thresholds=law.thresholds,
        predicted_errors=law.task_errors,
        normalizers=np.array([norm]),
    )


def fit_spca_binary(
    ds: TaskDataset, labels: np.ndarray | None = None, target_task: int = 0
) -> FittedModel:
    """Binary matched-filter classifier for an explicit label vector.

    labels holds one score per (task, class) block; None means the naive
    -1/+1 assignment. Predictions are invariant under positive scaling of
    labels, and the averaged-mean rule adapts its orientation to the sign
    of the plug-in mean difference, so negating labels leaves predictions
    unchanged too.
    """
    layout = ds.layout
    if layout.m != 2:
        raise InputError("binary classifier needs two classes per task")
    if not 0 <= target_task < layout.k:
        raise InputError(f"target task {target_task} outside 0..{layout.k - 1}")
    if labels is None:
        labels = naive_labels(layout)
    labels = np.asarray(labels, dtype=float)
    if labels.shape != (layout.n_blocks,):
        raise InputError(
            f"labels shape {labels.shape}, expected ({layout.n_blocks},)"
        )
    stats = estimate_stats(ds)
    return _fit_binary(ds, labels, target_task, stats, kind="spca")


def fit_mtl_spca_binary(ds: TaskDataset, target_task: int = 0) -> FittedModel:
    """Binary matched filter with closed-form optimal labels for the target.

    When the estimated signal matrix is clipped to zero (no detectable class
    structure) the optimal labels degenerate to zero; the fit then warns and
    falls back to the uniform -1/+1 assignment, which yields chance-level
    predictions instead of failing.
    """
    layout = ds.layout
    if layout.m != 2:
        raise InputError("binary classifier needs two classes per task")
    if not 0 <= target_task < layout.k:
        raise InputError(f"target task {target_task} outside 0..{layout.k - 1}")
    stats = estimate_stats(ds)
    labels = optimal_labels(stats.signal, stats.proportions, target_task)
    if not np.any(labels):
        warnings.warn("no estimable signal: optimal labels are zero, using uniform")
        labels = naive_labels(layout)
    return _fit_binary(ds, labels, target_task, stats, kind="mtl-spca")


def fit_algorithm1(ds: TaskDataset, target_task: int = 0) -> FittedModel:
    """Multi-class one-vs-all classifier with per-head optimal labels.

    Features are z-scored per task first; test points go through the target
    task's stored map. Each head l treats class l as the first class and the
    remaining classes merged as the second, estimates statistics on that
    regrouped view, and scores with its own optimal-label filter. The stored
    center of head l is the plug-in score mean of the target task's class l,
    subtracted at prediction time.
    """
    layout = ds.layout
    if layout.m < 2:
        raise InputError("one-vs-all needs at least two classes")
    if not 0 <= target_task < layout.k:
        raise InputError(f"target task {target_task} outside 0..{layout.k - 1}")
    zmaps = zscore_maps(ds)
    p, m = ds.p, layout.m
    directions = np.empty((p, m))
    ova_labels = np.empty((2 * layout.k, m))
    centers = np.empty(m)
    normalizers = np.empty(m)
    head_stats, block_sums = one_vs_all_stats(ds, maps=zmaps)
    for cls in range(m):
        stats = head_stats[cls]
        # head statistics are internally constructed (PSD signal, valid
        # proportions), so the unchecked theory cores apply
        lab = _optimal_labels_core(stats.signal, stats.proportions, target_task)
        if not np.any(lab):
            # signal estimate clipped to zero: no class structure to exploit
            warnings.warn(f"class {cls} head has no estimable signal, using uniform labels")
            lab = naive_labels(stats.layout)
        law = _mtl_vector_law(stats.signal, stats.proportions, stats.ratio, lab)
        # X y with block-constant labels collapses to a block-sum combination
        per_block = np.empty(layout.n_blocks)
        for t in range(layout.k):
            per_block[t * m : (t + 1) * m] = lab[2 * t + 1]
            per_block[t * m + cls] = lab[2 * t]
        v = block_sums @ per_block
        norm = float(np.linalg.norm(v))
        if norm <= 0:
            raise NumericalError(f"degenerate direction for class {cls} head")
        directions[:, cls] = v / norm
        ova_labels[:, cls] = lab
        centers[cls] = law.means[stats.layout.block_index(target_task, 0), 0]
        normalizers[cls] = norm
    return FittedModel(
        kind="one-vs-all",
        layout=layout,
        target_task=target_task,
        ova_directions=directions,
        ova_labels=ova_labels,
        ova_centers=centers,
        normalizers=normalizers,
        zmaps=zmaps,
    )


def _as_batch(model: FittedModel, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[:, None]
    p = _model_dim(model)
    if x.shape[0] != p:
        raise InputError(f"test points have dimension {x.shape[0]}, model expects {p}")
    return x, single


def _model_dim(model: FittedModel) -> int:
    if model.kind == "one-vs-all":
        return model.ova_directions.shape[0]
    return model.projector.basis.shape[0]


def predict_scores(model: FittedModel, x: np.ndarray) -> dict:
    """Raw per-head scores plus the quantities the decision uses."""
    x, single = _as_batch(model, x)
    if model.kind == "pca":
        proj = model.projector.basis.T @ x
        return {"projected": proj[:, 0] if single else proj}
    if model.kind == "spca-binary":
        s = model.projector.basis[:, 0] @ x
        return {
            "score": s[0] if single else s,
            "threshold": float(model.thresholds[model.target_task]),
        }
    raw = _ova_scores(model, x)
    centered = raw - model.ova_centers[:, None]
    if single:
        raw, centered = raw[:, 0], centered[:, 0]
    return {"raw": raw, "centered": centered}


def _ova_scores(model: FittedModel, x: np.ndarray) -> np.ndarray:
    """Head scores of z-scored inputs without materializing the z-scored
    batch: fold the affine map into the projection directions."""
    zm = model.zmaps[model.target_task]
    w = model.ova_directions / zm.scale[:, None]
    return w.T @ x - (w.T @ zm.shift)[:, None]


def predict(model: FittedModel, x: np.ndarray, centered: bool = True) -> np.ndarray:
    """Class indices (0-based) for one point (p,) or a batch (p, n).

    The `centered` switch only affects one-vs-all models; uncentered argmax
    is kept for comparison experiments.
    """
    x, single = _as_batch(model, x)
    t = model.target_task
    if model.kind == "pca":
        if model.chance_default or model.projector.tau == 0:
            out = np.zeros(x.shape[1], dtype=int)
        else:
            proj = model.projector.basis.T @ x  # (tau, n)
            d2 = (
                np.sum(model.centroids**2, axis=1)[:, None]
                - 2.0 * model.centroids @ proj
            )
            out = np.argmin(d2, axis=0)
    elif model.kind == "spca-binary":
        s = model.projector.basis[:, 0] @ x
        thr = model.thresholds[t]
        mv = model.score_means
        sign = 1.0 if mv[2 * t] >= mv[2 * t + 1] else -1.0
        out = np.where(sign * (s - thr) >= 0.0, 0, 1)
    elif model.kind == "one-vs-all":
        g = _ova_scores(model, x)
        if centered:
            g = g - model.ova_centers[:, None]
        out = np.argmax(g, axis=0)
    else:
        raise InputError(f"unknown model kind {model.kind!r}")
    return out[0] if single else out


# ------------------------------------------------------------ persistence

MODEL_MAGIC = "mtspca-model"
MODEL_VERSION = 1
_FMT = "%.17g"


def _write_matrix(lines: list[str], name: str, a: np.ndarray) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    lines.append(f"matrix {name} {a.shape[0]} {a.shape[1]}")
    for row in a:
        lines.append(" ".join(_FMT % v for v in row))


def save_model(model: FittedModel, path: str) -> None:
    """Serialize predict-relevant fields to a versioned text file.

    Arrays are written with 17 significant digits and round-trip exactly.
    The stats diagnostic is intentionally not persisted.
    """
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION}"]
    lines.append(f"kind {model.kind}")
    lines.append(f"target_task {model.target_task}")
    lines.append(f"tasks {model.layout.k}")
    lines.append(f"classes {model.layout.m}")
    _write_matrix(lines, "counts", model.layout.counts)
    if model.kind == "pca":
        lines.append(f"chance_default {int(model.chance_default)}")
        lines.append(f"centroids_source {model.centroids_source}")
        _write_matrix(lines, "projector", model.projector.basis)
        _write_matrix(lines, "centroids", model.centroids)
        _write_matrix(lines, "centroids_empirical", model.centroids_empirical)
    elif model.kind == "spca-binary":
        lines.append(f"projector_kind {model.projector.kind}")
        _write_matrix(lines, "direction", model.projector.basis)
        _write_matrix(lines, "labels", model.labels)
        _write_matrix(lines, "score_means", model.score_means)
        _write_matrix(lines, "thresholds", model.thresholds)
        _write_matrix(lines, "predicted_errors", model.predicted_errors)
        _write_matrix(lines, "normalizers", model.normalizers)
    elif model.kind == "one-vs-all":
        _write_matrix(lines, "directions", model.ova_directions)
        _write_matrix(lines, "ova_labels", model.ova_labels)
        _write_matrix(lines, "centers", model.ova_centers)
        _write_matrix(lines, "normalizers", model.normalizers)
        _write_matrix(lines, "zshift", np.column_stack([zm.shift for zm in model.zmaps]))
        _write_matrix(lines, "zscale", np.column_stack([zm.scale for zm in model.zmaps]))
    else:
        raise InputError(f"unknown model kind {model.kind!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_model_lines(path: str) -> tuple[dict, dict]:
    scalars: dict = {}
    matrices: dict = {}
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith(MODEL_MAGIC):
        raise InputError(f"{path}: not a model file")
    version = lines[0].split()
    if len(version) != 2 or int(version[1]) != MODEL_VERSION:
        raise InputError(f"{path}: unsupported model version {lines[0]!r}")
    i = 1
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        parts = line.split()
        if parts[0] == "matrix":
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            block = []
            for r in range(rows):
                block.append([float(v) for v in lines[i + r].split()])
                if len(block[-1]) != cols:
                    raise InputError(f"{path}: matrix {name} row {r} has wrong width")
            matrices[name] = np.asarray(block, dtype=float).reshape(rows, cols)
            i += rows
        else:
            key, _, val = line.partition(" ")
            scalars[key] = val
    return scalars, matrices


def load_model(path: str) -> FittedModel:
    """Inverse of save_model; returns a model with stats=None."""
    scalars, mats = _read_model_lines(path)
    try:
        kind = scalars["kind"]
        target = int(scalars["target_task"])
        layout = TaskLayout(mats["counts"].astype(int))
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc}") from exc
    if kind == "pca":
        return FittedModel(
            kind=kind,
            layout=layout,
            target_task=target,
            projector=Projector(basis=mats["projector"], kind="pca"),
            centroids=mats["centroids"],
            centroids_empirical=mats["centroids_empirical"],
            centroids_source=scalars.get("centroids_source", "plugin"),
            chance_default=bool(int(scalars.get("chance_default", "0"))),
        )
    if kind == "spca-binary":
        return FittedModel(
            kind=kind,
            layout=layout,
            target_task=target,
            projector=Projector(
                basis=mats["direction"], kind=scalars.get("projector_kind", "spca")
            ),
            labels=mats["labels"].ravel(),
            score_means=mats["score_means"].ravel(),
            thresholds=mats["thresholds"].ravel(),
            predicted_errors=mats["predicted_errors"].ravel(),
            normalizers=mats["normalizers"].ravel(),
        )
    if kind == "one-vs-all":
        zshift = mats["zshift"]
        zscale = mats["zscale"]
        zmaps = [
            ZScoreMap(shift=zshift[:, t].copy(), scale=zscale[:, t].copy())
            for t in range(layout.k)
        ]
        return FittedModel(
            kind=kind,
            layout=layout,
            target_task=target,
            ova_directions=mats["directions"],
            ova_labels=mats["ova_labels"],
            ova_centers=mats["centers"].ravel(),
            normalizers=mats["normalizers"].ravel(),
            zmaps=zmaps,
        )
    raise InputError(f"{path}: unknown model kind {kind!r}")
