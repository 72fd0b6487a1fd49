from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

import numpy as np

from ..errors import SingleClassCorpus

MODEL_KINDS = ("lsvm", "logreg", "mnb", "gbt")


@dataclass(frozen=True)
class HyperParams:
    """Training controls.  alpha, C, gamma, subsample and balanced weighting
    default to values tuned for screening; the rest are conventional choices."""

    model_kind: str = "lsvm"
    lsvm_alpha: float = 2.0
    logreg_c: float = 0.01
    mnb_smoothing: float = 1.0
    gbt_gamma: float = 20.0
    gbt_scale_pos_weight: float | None = None  # None: negatives / positives
    gbt_subsample: float = 0.2
    gbt_trees: int = 100
    gbt_max_depth: int = 6
    gbt_learning_rate: float = 0.3
    gbt_lambda: float = 1.0
    class_weighting: str = "balanced"
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}")
        for name in ("lsvm_alpha", "logreg_c", "mnb_smoothing", "gbt_learning_rate", "gbt_lambda"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.gbt_gamma < 0:
            raise ValueError("gbt_gamma must be >= 0")
        if self.gbt_scale_pos_weight is not None and not self.gbt_scale_pos_weight > 0:
            raise ValueError("gbt_scale_pos_weight must be > 0")
        if not 0 < self.gbt_subsample <= 1:
            raise ValueError("gbt_subsample must lie in (0, 1]")
        if self.gbt_trees < 1 or self.gbt_max_depth < 0:
            raise ValueError("gbt_trees must be >= 1 and gbt_max_depth >= 0")
        if self.class_weighting not in ("balanced", "none"):
            raise ValueError("class_weighting must be 'balanced' or 'none'")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HyperParams":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    y = y.astype(np.int64)
    if y.size == 0 or y.min() == y.max():
        raise SingleClassCorpus("training labels must contain both classes")
    return y


def class_weights(labels, mode: str = "balanced") -> tuple[float, float]:
    """Per-class loss weights ``n / (2 * n_c)``; ``(1, 1)`` when mode is 'none'."""
    y = check_labels(labels)
    if mode == "none":
        return 1.0, 1.0
    if mode != "balanced":
        raise ValueError(f"unknown class weighting {mode!r}")
    n = y.size
    n1 = int(y.sum())
    n0 = n - n1
    return n / (2 * n0), n / (2 * n1)
