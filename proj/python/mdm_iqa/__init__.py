"""Contrast-distortion image quality metric (C++ core)."""

from ._core import (
    MdmError,
    Model,
    downsample,
    downsample_factor,
    entropy,
    evaluate,
    extract,
    f_test,
    load_gray,
    logistic5,
    make_synthetic_dataset,
    mdm_feature,
    minkowski_deviation,
    pearson,
    run_protocol,
    save_pgm,
    score,
    spearman,
    train_svc,
    train_svr,
)

__all__ = [
    "MdmError",
    "Model",
    "downsample",
    "downsample_factor",
    "entropy",
    "evaluate",
    "extract",
    "f_test",
    "load_gray",
    "logistic5",
    "make_synthetic_dataset",
    "mdm_feature",
    "minkowski_deviation",
    "pearson",
    "run_protocol",
    "save_pgm",
    "score",
    "spearman",
    "train_svc",
    "train_svr",
]
