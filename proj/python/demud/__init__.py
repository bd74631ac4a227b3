"""Novelty ranking by incremental-SVD reconstruction error, with explanations."""

from ._demud import (
    DataError,
    DimensionError,
    Explanation,
    IoError,
    SubspaceModel,
    UsageError,
    __version__,
    choose_t,
    demud_rank,
    discovery_curve,
    fit_batch,
    init_singleton,
    load_npy,
    make_explanation,
    nauc,
    random_baseline,
    random_rank,
    reconstruct,
    residual,
    save_npy,
    score,
    score_all,
    shift_residual,
    svd_rank,
    update,
)

__all__ = [
    "DataError",
    "DimensionError",
    "Explanation",
    "IoError",
    "SubspaceModel",
    "UsageError",
    "__version__",
    "choose_t",
    "demud_rank",
    "discovery_curve",
    "fit_batch",
    "init_singleton",
    "load_npy",
    "make_explanation",
    "nauc",
    "random_baseline",
    "random_rank",
    "reconstruct",
    "residual",
    "save_npy",
    "score",
    "score_all",
    "shift_residual",
    "svd_rank",
    "update",
]
