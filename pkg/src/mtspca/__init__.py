"""Multi-task supervised PCA classification with asymptotic performance laws.

The package covers three families of spectral classifiers for Gaussian
mixtures spread over several related tasks:

* plain PCA projection of the pooled data,
* supervised PCA (project on directions built from +-1 label scores),
* multi-task supervised PCA with optimally designed label scores.

`theory` predicts the large-dimensional classification error of each method
in closed form from second-order statistics of the class means; `classify`
fits the matching finite-sample models; `harness` cross-validates the two
against each other on synthetic data.
"""

from .classify import (
    FittedModel,
    Projector,
    fit_algorithm1,
    fit_mtl_spca_binary,
    fit_pca,
    fit_spca_binary,
    load_model,
    naive_labels,
    predict,
    predict_scores,
    save_model,
)
from .data import (
    MixtureSpec,
    SyntheticConfig,
    TaskDataset,
    TaskLayout,
    ZScoreMap,
    binary_transfer_mixture,
    expand_labels,
    load_csv,
    load_features,
    one_vs_all_view,
    rotated_multiclass_mixture,
    save_csv,
    single_task_view,
    synth_gaussian,
    zscore_maps,
    zscore_per_task,
)
from .errors import InputError, NotPSDError, NumericalError, SingularMatrixError
from .estimation import SufficientStats, estimate_stats, exact_stats, one_vs_all_stats
from .harness import (
    EmpiricalScoreLaw,
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
from .linalg import EigenDecomposition, psd_sqrt, spd_solve, sym_eig, top_subspace
from .theory import (
    ScoreLaw,
    SpectralSummary,
    mtl_score_law,
    optimal_error,
    optimal_labels,
    pca_score_law,
    pca_spca_gap,
    phase_transition,
    qfunc,
    spca_score_law,
)

__version__ = "0.1.0"

__all__ = [
    "EigenDecomposition",
    "EmpiricalScoreLaw",
    "ExperimentReport",
    "FittedModel",
    "InputError",
    "MixtureSpec",
    "NotPSDError",
    "NumericalError",
    "Projector",
    "ScoreLaw",
    "SingularMatrixError",
    "SpectralSummary",
    "SufficientStats",
    "SyntheticConfig",
    "TaskDataset",
    "TaskLayout",
    "ZScoreMap",
    "binary_transfer_mixture",
    "estimate_stats",
    "exact_stats",
    "expand_labels",
    "fit_algorithm1",
    "fit_mtl_spca_binary",
    "fit_pca",
    "fit_spca_binary",
    "load_csv",
    "load_features",
    "load_model",
    "load_report",
    "monte_carlo_oracle",
    "mtl_score_law",
    "naive_labels",
    "one_vs_all_stats",
    "one_vs_all_view",
    "optimal_error",
    "optimal_labels",
    "pca_score_law",
    "pca_spca_gap",
    "phase_transition",
    "predict",
    "predict_scores",
    "psd_sqrt",
    "qfunc",
    "rotated_multiclass_mixture",
    "run_fig1",
    "run_fig2",
    "run_fig3_synth",
    "run_fig4_synth",
    "run_runtime_bench",
    "save_csv",
    "save_model",
    "save_report",
    "single_task_view",
    "spca_score_law",
    "spd_solve",
    "sym_eig",
    "synth_gaussian",
    "top_subspace",
    "zscore_maps",
    "zscore_per_task",
]
