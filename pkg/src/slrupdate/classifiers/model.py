"""Trained model artifact, training dispatch, prediction and threshold tuning."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import ConfigError, DimensionMismatch, IoFailure, UnreachableRecall, VocabularyMismatch
from ..text import SparseDocVector, Vocabulary, to_matrix
from .bayes import fit_multinomial_nb, nb_scores
from .boosting import Tree, fit_gbt, gbt_scores
from .linear import fit_linear_svm, fit_logistic
from .params import HyperParams, check_labels, class_weights

MODEL_FORMAT = "slrupdate-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Prediction:
    id: str
    score: float
    label: int


@dataclass
class TrainedModel:
    model_kind: str
    hyperparams: HyperParams
    parameters: dict[str, Any]
    vocabulary: Vocabulary | None = None
    threshold: float = 0.0
    training: dict[str, Any] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.training["n_features"])

    def decision_function(self, X) -> np.ndarray:
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"model expects {self.dim} features, got {X.shape[1]}")
        p = self.parameters
        if self.model_kind in ("lsvm", "logreg"):
            return np.asarray(X @ p["weights"], dtype=np.float64).ravel() + p["bias"]
        if self.model_kind == "mnb":
            return nb_scores(X, p["class_log_prior"], p["feature_log_prob"])
        if self.model_kind == "gbt":
            return gbt_scores(X, p["base_score"], p["trees"])
        raise ValueError(f"unknown model kind {self.model_kind!r}")

    def probability(self, X) -> np.ndarray:
        """Logistic link of the score (meaningful for logreg and gbt)."""
        s = self.decision_function(X)
        return np.exp(-np.logaddexp(0.0, -s))

    def with_threshold(self, threshold: float) -> "TrainedModel":
        return replace(self, threshold=float(threshold))


def corpus_fingerprint(X, y) -> str:
    X = sp.csr_matrix(X, dtype=np.float64)
    h = hashlib.sha256()
    for arr in (X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data, np.asarray(y, dtype=np.int64)):
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(repr(X.shape).encode())
    return h.hexdigest()[:16]


def _as_matrix(X, vocabulary: Vocabulary | None = None):
    if isinstance(X, (list, tuple)):
        dim = len(vocabulary) if vocabulary is not None else None
        if vocabulary is not None:
            for v in X:
                _check_vector(v, vocabulary)
        return to_matrix(X, dim)
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    return np.asarray(X, dtype=np.float64)


def _check_vector(v: SparseDocVector, vocabulary: Vocabulary):
    if v.fingerprint and v.fingerprint != vocabulary.fingerprint:
        raise VocabularyMismatch("document was vectorized against a different vocabulary")
    if v.dim != len(vocabulary):
        raise VocabularyMismatch(f"document dimension {v.dim} != vocabulary size {len(vocabulary)}")


def train(X, y, hp: HyperParams | None = None, vocabulary: Vocabulary | None = None) -> TrainedModel:
    hp = hp or HyperParams()
    y = check_labels(y)
    X = _as_matrix(X, vocabulary)
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"{X.shape[0]} documents but {y.size} labels")
    if vocabulary is not None and X.shape[1] != len(vocabulary):
        raise DimensionMismatch("matrix width differs from vocabulary size")
    n1 = int(y.sum())
    n0 = y.size - n1
    w0, w1 = class_weights(y, hp.class_weighting)
    training = {
        "n_docs": int(y.size),
        "n_positive": n1,
        "n_features": int(X.shape[1]),
        "class_weights": [w0, w1],
        "corpus_fingerprint": corpus_fingerprint(X, y),
        "seed": hp.seed,
    }
    kind = hp.model_kind
    if kind in ("lsvm", "logreg"):
        sw = np.where(y == 1, w1, w0)
        if kind == "lsvm":
            w, b = fit_linear_svm(X, y, sw, hp.lsvm_alpha, hp.epochs, hp.seed)
        else:
            w, b = fit_logistic(X, y, sw, hp.logreg_c, hp.epochs, hp.seed)
        params = {"weights": w, "bias": float(b)}
    elif kind == "mnb":
        lp, ll = fit_multinomial_nb(X, y, hp.mnb_smoothing)
        params = {"class_log_prior": lp, "feature_log_prob": ll}
    elif kind == "gbt":
        spw = hp.gbt_scale_pos_weight if hp.gbt_scale_pos_weight is not None else n0 / n1
        training["scale_pos_weight"] = spw
        base, trees = fit_gbt(
            X, y, scale_pos_weight=spw, gamma=hp.gbt_gamma, subsample=hp.gbt_subsample,
            n_trees=hp.gbt_trees, max_depth=hp.gbt_max_depth,
            learning_rate=hp.gbt_learning_rate, lam=hp.gbt_lambda, seed=hp.seed,
        )
        params = {"base_score": base, "trees": trees}
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return TrainedModel(kind, hp, params, vocabulary, 0.0, training)


def train_lsvm(X, y, hp: HyperParams | None = None, vocabulary=None) -> TrainedModel:
    return train(X, y, replace(hp or HyperParams(), model_kind="lsvm"), vocabulary)


def train_logreg(X, y, hp: HyperParams | None = None, vocabulary=None) -> TrainedModel:
    return train(X, y, replace(hp or HyperParams(), model_kind="logreg"), vocabulary)


def train_mnb(X, y, hp: HyperParams | None = None, vocabulary=None) -> TrainedModel:
    return train(X, y, replace(hp or HyperParams(), model_kind="mnb"), vocabulary)


def train_gbt(X, y, hp: HyperParams | None = None, vocabulary=None) -> TrainedModel:
    return train(X, y, replace(hp or HyperParams(), model_kind="gbt"), vocabulary)


def scores(model: TrainedModel, docs) -> np.ndarray:
    X = _as_matrix(docs, model.vocabulary)
    if X.shape[0] == 0:
        return np.zeros(0)
    return model.decision_function(X)


def predict(model: TrainedModel, docs, ids: Sequence[str] | None = None) -> list[Prediction]:
    """Score documents; label is 1 iff score > model.threshold."""
    s = scores(model, docs)
    if ids is None:
        ids = [str(i) for i in range(len(s))]
    if len(ids) != len(s):
        raise DimensionMismatch("ids and documents differ in length")
    return [Prediction(i, float(v), int(v > model.threshold)) for i, v in zip(ids, s)]


def threshold_for_recall(scores_, labels, target_recall: float) -> float:
    """Largest threshold whose strict-inequality labelling keeps recall >= target.

    Flagging the k highest-scoring positives requires a threshold below the
    k-th positive score; the largest such float is the one just beneath it.
    """
    if not 0 < target_recall <= 1:
        raise ValueError("target_recall must lie in (0, 1]")
    s = np.asarray(scores_, dtype=np.float64)
    y = np.asarray(labels)
    pos = np.sort(s[y == 1])[::-1]
    n_pos = pos.size
    if n_pos == 0:
        raise UnreachableRecall("validation set has no positive examples")
    k = next((k for k in range(1, n_pos + 1) if k / n_pos >= target_recall), None)
    if k is None:
        raise UnreachableRecall(f"recall {target_recall} is not reachable")
    return float(np.nextafter(pos[k - 1], -np.inf))


def tune_threshold(model: TrainedModel, validation_docs, validation_labels, target_recall: float) -> float:
    return threshold_for_recall(scores(model, validation_docs), validation_labels, target_recall)


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------


def _params_to_json(kind: str, p: dict) -> dict:
    if kind in ("lsvm", "logreg"):
        return {"weights": [float(x) for x in p["weights"]], "bias": float(p["bias"])}
    if kind == "mnb":
        return {
            "class_log_prior": [float(x) for x in p["class_log_prior"]],
            "feature_log_prob": [[float(x) for x in row] for row in p["feature_log_prob"]],
        }
    return {"base_score": float(p["base_score"]), "trees": [t.to_dict() for t in p["trees"]]}


def _params_from_json(kind: str, p: dict) -> dict:
    if kind in ("lsvm", "logreg"):
        return {"weights": np.asarray(p["weights"], dtype=np.float64), "bias": float(p["bias"])}
    if kind == "mnb":
        return {
            "class_log_prior": np.asarray(p["class_log_prior"], dtype=np.float64),
            "feature_log_prob": np.asarray(p["feature_log_prob"], dtype=np.float64),
        }
    return {"base_score": float(p["base_score"]), "trees": [Tree.from_dict(t) for t in p["trees"]]}


def model_to_json(model: TrainedModel) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "model_kind": model.model_kind,
        "hyperparams": model.hyperparams.to_dict(),
        "seed": model.hyperparams.seed,
        "threshold": model.threshold,
        "vocabulary": list(model.vocabulary.tokens) if model.vocabulary is not None else None,
        "training": model.training,
        "parameters": _params_to_json(model.model_kind, model.parameters),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def model_from_json(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model file is not valid JSON: {exc}") from exc
    if doc.get("format") != MODEL_FORMAT:
        raise ConfigError("not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise ConfigError(f"unsupported model version {doc.get('version')!r}")
    kind = doc["model_kind"]
    vocab = Vocabulary(tuple(doc["vocabulary"])) if doc.get("vocabulary") is not None else None
    return TrainedModel(
        model_kind=kind,
        hyperparams=HyperParams.from_dict(doc["hyperparams"]),
        parameters=_params_from_json(kind, doc["parameters"]),
        vocabulary=vocab,
        threshold=float(doc["threshold"]),
        training=doc["training"],
    )


def save_model(model: TrainedModel, path: str | Path) -> None:
    try:
        Path(path).write_text(model_to_json(model), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_model(path: str | Path) -> TrainedModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return model_from_json(text)
