"""Training-data loading, held-out threshold tuning, prediction files.

These are the pieces the ``train``/``predict``/``evaluate``/``update``
commands are built from; they are usable on their own as a library.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .classifiers import HyperParams, Prediction, TrainedModel, predict, train, tune_threshold
from .errors import ConfigError, IoFailure, MalformedCsv, SingleClassCorpus
from .metrics import EvalReport, evaluate
from .records import StudyRecord, read_bibtex_file
from .text import (
    LabeledDocument,
    SparseDocVector,
    Vocabulary,
    build_vocabulary,
    documents_from_records,
    vectorize_documents,
)

LOGGER = logging.getLogger(__name__)

PREDICTION_COLUMNS = ("id", "score", "label")


@dataclass
class TrainingCorpus:
    docs: list[LabeledDocument]
    vocabulary: Vocabulary
    vectors: list[SparseDocVector]

    @property
    def labels(self) -> np.ndarray:
        return np.array([d.relevance for d in self.docs], dtype=np.int64)

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())


def labeled_documents(included: Iterable[StudyRecord], excluded: Iterable[StudyRecord]) -> list[LabeledDocument]:
    docs = documents_from_records(included, 1) + documents_from_records(excluded, 0)
    n1 = sum(d.relevance for d in docs)
    if n1 == 0 or n1 == len(docs):
        raise SingleClassCorpus(f"need included and excluded studies, got {n1} and {len(docs) - n1}")
    return docs


def build_corpus(included: Iterable[StudyRecord], excluded: Iterable[StudyRecord]) -> TrainingCorpus:
    """Label included studies 1 and excluded 0; the vocabulary spans all of them."""
    docs = labeled_documents(included, excluded)
    vocab = build_vocabulary(docs)
    return TrainingCorpus(docs, vocab, vectorize_documents(docs, vocab))


def load_corpus(included_bib: str | Path, excluded_bib: str | Path) -> TrainingCorpus:
    return build_corpus(read_bibtex_file(included_bib), read_bibtex_file(excluded_bib))


def stratified_split(labels: Sequence[int], fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded split keeping the class ratio; returns sorted (train, held-out) indices.

    Each class contributes ``round(fraction * n_c)`` held-out rows, clamped
    so both sides keep at least one row of every class that has two or more.
    """
    if not 0 < fraction < 1:
        raise ValueError("validation split must lie strictly between 0 and 1")
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_idx, val_idx = [], []
    for c in (0, 1):
        idx = np.nonzero(y == c)[0]
        idx = idx[rng.permutation(idx.size)]
        k = int(round(fraction * idx.size))
        if idx.size >= 2:
            k = min(max(k, 1), idx.size - 1)
        else:
            k = 0
        val_idx.append(idx[:k])
        train_idx.append(idx[k:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def train_on_corpus(corpus: TrainingCorpus, hp: HyperParams, rows: Sequence[int] | None = None) -> TrainedModel:
    vectors = corpus.vectors if rows is None else [corpus.vectors[i] for i in rows]
    labels = corpus.labels if rows is None else corpus.labels[np.asarray(rows)]
    return train(vectors, labels, hp, corpus.vocabulary)


def train_tuned(corpus: TrainingCorpus, hp: HyperParams, target_recall: float,
                validation_split: float = 0.2) -> TrainedModel:
    """Train on the larger part of a stratified split and set the decision
    threshold on the held-out part so its recall reaches ``target_recall``."""
    tr, va = stratified_split(corpus.labels, validation_split, hp.seed)
    model = train_on_corpus(corpus, hp, tr)
    val_vectors = [corpus.vectors[i] for i in va]
    threshold = tune_threshold(model, val_vectors, corpus.labels[va], target_recall)
    model = model.with_threshold(threshold)
    model.training.update({
        "validation_split": validation_split,
        "n_validation": int(va.size),
        "target_recall": target_recall,
    })
    return model


def train_all(corpus: TrainingCorpus, kinds: Sequence[str], hp: HyperParams, target_recall: float,
              validation_split: float = 0.2) -> dict[str, TrainedModel]:
    models = {}
    for kind in kinds:
        LOGGER.info("training %s on %d documents", kind, len(corpus.docs))
        models[kind] = train_tuned(corpus, replace(hp, model_kind=kind), target_recall, validation_split)
    return models


def predict_records(model: TrainedModel, records: Sequence[StudyRecord]) -> list[Prediction]:
    """Predictions in screening order: score descending, ties by id."""
    docs = documents_from_records(records)
    if not docs:
        return []
    vectors = vectorize_documents(docs, model.vocabulary)
    preds = predict(model, vectors, [d.id for d in docs])
    return sorted(preds, key=lambda p: (-p.score, p.id))


def predictions_csv(predictions: Iterable[Prediction]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(PREDICTION_COLUMNS)
    for p in predictions:
        w.writerow([p.id, repr(float(p.score)), p.label])
    return buf.getvalue()


def write_predictions(predictions: Iterable[Prediction], path: str | Path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(predictions_csv(predictions))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def _read_csv(path: str | Path, required: Sequence[str]) -> list[dict[str, str]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(required) - set(reader.fieldnames or ())
            if missing:
                raise MalformedCsv(1, f"missing column(s) {', '.join(sorted(missing))}")
            return list(reader)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_predictions(path: str | Path) -> list[Prediction]:
    out = []
    for line, row in enumerate(_read_csv(path, PREDICTION_COLUMNS), start=2):
        try:
            label = int(row["label"])
            score = float(row["score"])
        except ValueError as exc:
            raise MalformedCsv(line, str(exc)) from exc
        if label not in (0, 1):
            raise MalformedCsv(line, f"label must be 0 or 1, got {label}")
        out.append(Prediction(row["id"], score, label))
    return out


def read_labels(path: str | Path) -> dict[str, int]:
    """``id -> relevance`` from any CSV with ``id`` and ``relevance`` columns."""
    labels = {}
    for line, row in enumerate(_read_csv(path, ("id", "relevance")), start=2):
        rel = row["relevance"].strip()
        if rel not in ("0", "1"):
            raise MalformedCsv(line, f"relevance must be 0 or 1, got {rel!r}")
        labels[row["id"]] = int(rel)
    return labels


def evaluate_predictions(predictions: Sequence[Prediction], labels: Mapping[str, int]) -> EvalReport:
    """Confusion over exactly the predicted studies; every one needs a label."""
    missing = [p.id for p in predictions if p.id not in labels]
    if missing:
        raise ConfigError(f"{len(missing)} predicted studies have no label (first: {missing[0]})")
    return evaluate([p.label for p in predictions], [labels[p.id] for p in predictions])
