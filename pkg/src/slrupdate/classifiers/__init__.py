from .params import MODEL_KINDS, HyperParams, class_weights
from .model import (
    Prediction,
    TrainedModel,
    load_model,
    predict,
    save_model,
    scores,
    threshold_for_recall,
    train,
    train_gbt,
    train_logreg,
    train_lsvm,
    train_mnb,
    tune_threshold,
)

__all__ = [
    "MODEL_KINDS",
    "HyperParams",
    "class_weights",
    "Prediction",
    "TrainedModel",
    "load_model",
    "predict",
    "save_model",
    "scores",
    "threshold_for_recall",
    "train",
    "train_gbt",
    "train_logreg",
    "train_lsvm",
    "train_mnb",
    "tune_threshold",
]
