"""Task-structured data containers, synthetic generators, and file formats.

A dataset is a p x n matrix whose columns are grouped task-major then
class-minor: all samples of (task 1, class 1), then (task 1, class 2), ...,
then task 2, and so on. Tasks all share the same number of classes m.
Internally tasks and classes are 0-based; CSV files and the CLI use 1-based
ids.

CSV data format (LF line endings, floats written with 17 significant digits):

    task,class,f0,f1,...,f<p-1>
    1,1,0.123...,...
    1,2,...

Rows may appear in any order; loading sorts them stably into the canonical
column grouping. Feature-only files (header starting with f0) are accepted
where class labels are not needed.

Config files are `key = value` lines with `#` comments. Recognized keys:
dimension p, per-(task,class) sample counts (rows separated by `;`, entries
by `,`), per-task relatedness betas, mean scale, class count m, family
(binary or multiclass), and seed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "TaskLayout",
    "TaskDataset",
    "MixtureSpec",
    "SyntheticConfig",
    "ZScoreMap",
    "binary_transfer_mixture",
    "rotated_multiclass_mixture",
    "synth_gaussian",
    "zscore_maps",
    "zscore_per_task",
    "apply_zscore",
    "expand_labels",
    "single_task_view",
    "one_vs_all_view",
    "save_csv",
    "load_csv",
    "load_features",
    "parse_config",
    "config_to_mixture",
]

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class TaskLayout:
    """Sample counts per (task, class), shape (k, m), all entries >= 1."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=int)
        if counts.ndim != 2 or counts.size == 0:
            raise InputError(f"counts must be a k x m table, got shape {counts.shape}")
        if np.any(counts < 1):
            raise InputError("every (task, class) block needs at least one sample")
        object.__setattr__(self, "counts", counts)

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def m(self) -> int:
        return self.counts.shape[1]

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def n_blocks(self) -> int:
        return self.counts.size

    def proportions(self) -> np.ndarray:
        """Flattened c_tj = n_tj / n in block order."""
        return self.counts.ravel() / self.n

    def block_index(self, task: int, cls: int) -> int:
        """Flat block index of (task, cls), both 0-based."""
        if not (0 <= task < self.k and 0 <= cls < self.m):
            raise InputError(f"block ({task}, {cls}) outside layout {self.counts.shape}")
        return task * self.m + cls

    def block_slice(self, task: int, cls: int) -> slice:
        """Column range of block (task, cls) in the canonical grouping."""
        b = self.block_index(task, cls)
        flat = self.counts.ravel()
        start = int(flat[:b].sum())
        return slice(start, start + int(flat[b]))

    def task_slice(self, task: int) -> slice:
        first = self.block_slice(task, 0)
        last = self.block_slice(task, self.m - 1)
        return slice(first.start, last.stop)


@dataclass(frozen=True)
class TaskDataset:
    """Feature matrix x of shape (p, n) with its column layout."""

    x: np.ndarray
    layout: TaskLayout

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise InputError(f"x must be a p x n matrix, got shape {x.shape}")
        if x.shape[1] != self.layout.n:
            raise InputError(
                f"x has {x.shape[1]} columns but layout expects {self.layout.n}"
            )
        object.__setattr__(self, "x", x)

    @property
    def p(self) -> int:
        return self.x.shape[0]

    def block(self, task: int, cls: int) -> np.ndarray:
        return self.x[:, self.layout.block_slice(task, cls)]


@dataclass(frozen=True)
class MixtureSpec:
    """Gaussian mixture ground truth: identity covariance, means per block.

    means has shape (k, m, p); sampling draws N(means[t, j], I_p) for each
    column of block (t, j).
    """

    layout: TaskLayout
    means: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        if means.ndim != 3 or means.shape[:2] != (self.layout.k, self.layout.m):
            raise InputError(
                f"means shape {means.shape} incompatible with layout "
                f"({self.layout.k}, {self.layout.m}, p)"
            )
        object.__setattr__(self, "means", means)

    @property
    def p(self) -> int:
        return self.means.shape[2]

    def flat_means(self) -> np.ndarray:
        """Means as a (k*m, p) matrix in block order."""
        return self.means.reshape(self.layout.n_blocks, self.p)


def binary_transfer_mixture(
    p: int, counts: np.ndarray, betas: np.ndarray, scale: float = 1.0
) -> MixtureSpec:
    """Two-class family: class means -(mu_t) and +(mu_t) per task, where
    mu_t = beta_t * scale * e_1 + sqrt(1 - beta_t^2) * scale * e_p.

    All task means live in the plane spanned by the first and last coordinate
    axes; beta_t in [0, 1] tunes how related task t is to a beta=1 task.
    """
    counts = np.asarray(counts, dtype=int)
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    if counts.ndim != 2 or counts.shape[1] != 2:
        raise InputError("binary family needs a k x 2 counts table")
    if len(betas) != counts.shape[0]:
        raise InputError(f"{len(betas)} betas for {counts.shape[0]} tasks")
    if np.any((betas < 0) | (betas > 1)):
        raise InputError("betas must lie in [0, 1]")
    if p < 2:
        raise InputError("binary family needs p >= 2")
    k = counts.shape[0]
    means = np.zeros((k, 2, p))
    for t, b in enumerate(betas):
        mu = np.zeros(p)
        mu[0] = b * scale
        mu[p - 1] = np.sqrt(1.0 - b * b) * scale
        means[t, 0] = -mu
        means[t, 1] = mu
    return MixtureSpec(layout=TaskLayout(counts), means=means)


def rotated_multiclass_mixture(
    p: int, counts: np.ndarray, betas: np.ndarray, scale: float = 2.0
) -> MixtureSpec:
    """m-class family: class j of task t has mean
    beta_t * scale * e_{j+1} + sqrt(1 - beta_t^2) * scale * e_{p-j-1}
    (1-based axes), so classes occupy disjoint coordinate pairs and beta_t
    rotates each task's means between a shared frame and an orthogonal one.
    """
    counts = np.asarray(counts, dtype=int)
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    if counts.ndim != 2:
        raise InputError("counts must be a k x m table")
    k, m = counts.shape
    if len(betas) != k:
        raise InputError(f"{len(betas)} betas for {k} tasks")
    if np.any((betas < 0) | (betas > 1)):
        raise InputError("betas must lie in [0, 1]")
    if p < 2 * m + 1:
        raise InputError(f"need p >= 2m + 1 = {2 * m + 1} to fit disjoint mean axes")
    means = np.zeros((k, m, p))
    for t, b in enumerate(betas):
        for j in range(m):
            means[t, j, j] = b * scale
            means[t, j, p - j - 2] = np.sqrt(1.0 - b * b) * scale
    return MixtureSpec(layout=TaskLayout(counts), means=means)


@dataclass(frozen=True)
class SyntheticConfig:
    """Seeded binary-family experiment description.

    p: feature dimension; counts: (k, 2) samples per block; betas: per-task
    relatedness in [0, 1]; scale: length of every class-mean vector; seed
    drives sampling when used through the CLI.
    """

    p: int
    counts: np.ndarray
    betas: np.ndarray
    scale: float = 1.0
    seed: int | None = None

    def mixture(self) -> MixtureSpec:
        return binary_transfer_mixture(self.p, self.counts, self.betas, self.scale)


def synth_gaussian(
    spec: MixtureSpec, rng: np.random.Generator | int | None = None
) -> TaskDataset:
    """Draw one dataset from a Gaussian mixture, canonical column grouping."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    layout = spec.layout
    x = rng.standard_normal((spec.p, layout.n))
    for t in range(layout.k):
        for j in range(layout.m):
            x[:, layout.block_slice(t, j)] += spec.means[t, j][:, None]
    return TaskDataset(x=x, layout=layout)


@dataclass(frozen=True)
class ZScoreMap:
    """Per-feature affine map x -> (x - shift) / scale for one task."""

    shift: np.ndarray
    scale: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return (x - self.shift) / self.scale
        return (x - self.shift[:, None]) / self.scale[:, None]


def zscore_maps(ds: TaskDataset) -> list[ZScoreMap]:
    """Per-task z-score maps (population std, ddof=0) without transforming.

    Features with std below 1e-12 keep scale 1 and trigger a warning rather
    than dividing by zero.
    """
    maps = []
    for t in range(ds.layout.k):
        block = ds.x[:, ds.layout.task_slice(t)]
        shift = block.mean(axis=1)
        scale = block.std(axis=1)
        flat = scale < 1e-12
        if np.any(flat):
            warnings.warn(
                f"task {t + 1}: {int(flat.sum())} feature(s) have zero variance, "
                "left unscaled"
            )
            scale = np.where(flat, 1.0, scale)
        maps.append(ZScoreMap(shift=shift, scale=scale))
    return maps


def zscore_per_task(ds: TaskDataset) -> tuple[TaskDataset, list[ZScoreMap]]:
    """Center and scale each task's features by its own mean and std."""
    maps = zscore_maps(ds)
    out = np.empty_like(ds.x)
    for t, zm in enumerate(maps):
        sl = ds.layout.task_slice(t)
        out[:, sl] = zm.apply(ds.x[:, sl])
    return TaskDataset(x=out, layout=ds.layout), maps


def apply_zscore(zmap: ZScoreMap, x: np.ndarray) -> np.ndarray:
    return zmap.apply(x)


def expand_labels(layout: TaskLayout, ytilde: np.ndarray) -> np.ndarray:
    """Per-sample labels y from per-block scores: y = J ytilde with J the
    block membership indicator. Accepts (mk,) or (mk, r) scores."""
    ytilde = np.asarray(ytilde, dtype=float)
    if ytilde.shape[0] != layout.n_blocks:
        raise InputError(
            f"ytilde has {ytilde.shape[0]} entries, layout has {layout.n_blocks} blocks"
        )
    return np.repeat(ytilde, layout.counts.ravel(), axis=0)


def single_task_view(ds: TaskDataset, task: int) -> TaskDataset:
    """Restrict a dataset to one task (keeps all its classes)."""
    layout = ds.layout
    if not 0 <= task < layout.k:
        raise InputError(f"task {task} outside 0..{layout.k - 1}")
    sl = layout.task_slice(task)
    return TaskDataset(x=ds.x[:, sl], layout=TaskLayout(layout.counts[task : task + 1]))


def one_vs_all_view(ds: TaskDataset, cls: int) -> TaskDataset:
    """Regroup an m-class dataset into 2 classes per task: class `cls` (0-based)
    first, then all remaining classes' samples in original order."""
    layout = ds.layout
    if not 0 <= cls < layout.m:
        raise InputError(f"class {cls} outside 0..{layout.m - 1}")
    out = np.empty_like(ds.x)
    counts = np.zeros((layout.k, 2), dtype=int)
    col = 0
    for t in range(layout.k):
        order = [cls] + [j for j in range(layout.m) if j != cls]
        for pos, j in enumerate(order):
            sl = layout.block_slice(t, j)
            width = sl.stop - sl.start
            out[:, col : col + width] = ds.x[:, sl]
            col += width
            counts[t, 1 if pos else 0] += width
    return TaskDataset(x=out, layout=TaskLayout(counts))


# ---------------------------------------------------------------- file I/O


def save_csv(ds: TaskDataset, path: str) -> None:
    """Write a dataset in the labeled CSV format (1-based task/class ids)."""
    p = ds.p
    header = "task,class," + ",".join(f"f{i}" for i in range(p))
    lines = [header]
    for t in range(ds.layout.k):
        for j in range(ds.layout.m):
            block = ds.block(t, j)
            for col in block.T:
                feats = ",".join(FLOAT_FMT % v for v in col)
                lines.append(f"{t + 1},{j + 1},{feats}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path: str) -> TaskDataset:
    """Read a labeled CSV back into the canonical column grouping.

    Requires a rectangular layout: every task must contain every class id
    1..m at least once. Rows are stably sorted by (task, class)."""
    with open(path) as fh:
        header = fh.readline().strip()
        fields = header.split(",")
        if fields[:2] != ["task", "class"]:
            raise InputError(f"{path}: expected header starting with task,class")
        p = len(fields) - 2
        if p < 1:
            raise InputError(f"{path}: no feature columns")
        tasks, classes, rows = [], [], []
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != p + 2:
                raise InputError(f"{path}:{ln}: expected {p + 2} fields, got {len(parts)}")
            try:
                tasks.append(int(parts[0]))
                classes.append(int(parts[1]))
                rows.append([float(v) for v in parts[2:]])
            except ValueError as exc:
                raise InputError(f"{path}:{ln}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    tasks = np.asarray(tasks)
    classes = np.asarray(classes)
    x = np.asarray(rows, dtype=float).T
    k = int(tasks.max())
    m = int(classes.max())
    if tasks.min() < 1 or classes.min() < 1:
        raise InputError(f"{path}: task and class ids are 1-based")
    counts = np.zeros((k, m), dtype=int)
    order = np.argsort((tasks - 1) * m + (classes - 1), kind="stable")
    for t, j in zip(tasks, classes):
        counts[t - 1, j - 1] += 1
    if np.any(counts == 0):
        missing = np.argwhere(counts == 0)[0]
        raise InputError(
            f"{path}: no samples for task {missing[0] + 1}, class {missing[1] + 1}"
        )
    return TaskDataset(x=x[:, order], layout=TaskLayout(counts))


def load_features(path: str) -> np.ndarray:
    """Read a feature-only CSV (header f0,f1,...) as a (p, n) matrix.

    Labeled files are accepted too; their task/class columns are dropped."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        skip = 2 if header[:2] == ["task", "class"] else 0
        if not header[skip:] or not header[skip].startswith("f"):
            raise InputError(f"{path}: expected feature columns named f0,f1,...")
        p = len(header) - skip
        rows = []
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != p + skip:
                raise InputError(f"{path}:{ln}: expected {p + skip} fields")
            try:
                rows.append([float(v) for v in parts[skip:]])
            except ValueError as exc:
                raise InputError(f"{path}:{ln}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float).T


# ----------------------------------------------------------- config files


def parse_config(path: str) -> dict:
    """Parse a `key = value` config file into typed entries."""
    raw = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{ln}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            raw[key] = val
    known = {"p", "counts", "betas", "scale", "family", "seed", "classes"}
    unknown = set(raw) - known
    if unknown:
        raise InputError(f"{path}: unknown config keys {sorted(unknown)}")
    out: dict = {"family": raw.get("family", "binary")}
    if out["family"] not in ("binary", "multiclass"):
        raise InputError(f"{path}: family must be binary or multiclass")
    try:
        out["p"] = int(raw["p"])
        out["counts"] = np.asarray(
            [[int(v) for v in row.split(",")] for row in raw["counts"].split(";")],
            dtype=int,
        )
        out["betas"] = np.asarray([float(v) for v in raw["betas"].split(",")])
        out["scale"] = float(raw.get("scale", "1.0"))
        out["seed"] = int(raw["seed"]) if "seed" in raw else None
        if "classes" in raw:
            out["classes"] = int(raw["classes"])
    except KeyError as exc:
        raise InputError(f"{path}: missing required key {exc}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return out


def config_to_mixture(cfg: dict) -> MixtureSpec:
    if cfg["family"] == "binary":
        return binary_transfer_mixture(cfg["p"], cfg["counts"], cfg["betas"], cfg["scale"])
    return rotated_multiclass_mixture(cfg["p"], cfg["counts"], cfg["betas"], cfg["scale"])
