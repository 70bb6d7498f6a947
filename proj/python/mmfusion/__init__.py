"""Multimodal RGB-D object recognition: preprocessing, models, fusion, metrics."""

from ._core import (
    CnnStream,
    ConfigError,
    DepthMlp,
    MmfusionError,
    __version__,
    accuracy,
    bilinear_resize,
    confusion_matrix,
    decision_fusion,
    default_config_json,
    evaluate_labels,
    generate_dataset,
    grayscale,
    run_experiment_json,
    softmax,
    weighted_prf,
)

__all__ = [
    "CnnStream",
    "ConfigError",
    "DepthMlp",
    "MmfusionError",
    "__version__",
    "accuracy",
    "bilinear_resize",
    "confusion_matrix",
    "decision_fusion",
    "default_config_json",
    "evaluate_labels",
    "generate_dataset",
    "grayscale",
    "run_experiment_json",
    "softmax",
    "weighted_prf",
]
