"""Bag-of-words preprocessing: merge title and abstract, clean, lemmatize, count.

Pipeline order for :meth:`TextPipeline.preprocess`:

1. strip URLs (``scheme://...`` or ``www....`` up to whitespace)
2. lowercase
3. split on runs of non-alphanumeric characters
4. drop stop-words
5. drop pure numbers and single-character tokens (toggle: ``drop_short``)
6. lemmatize each token with the bundled rule table

Lemmatization is repeated until the token stops changing and the step 4/5
filters are applied once more afterwards, which makes ``preprocess``
idempotent on its own joined output and keeps stop-words out of every
vocabulary.
"""

from __future__ import annotations

import csv
import hashlib
import io
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyCorpus, EmptyVocabulary, IoFailure, MalformedCsv, MissingTitle
from .records import StudyRecord

_URL = re.compile(r"(?:[A-Za-z][A-Za-z0-9+.\-]*://|www\.)\S*")
_TOKEN = re.compile(r"[^\W_]+")


def _data_lines(name: str, path: str | Path | None) -> list[str]:
    if path is None:
        text = resources.files("slrupdate.data").joinpath(name).read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    return frozenset(w.lower() for w in _data_lines("stopwords.txt", path))


@dataclass(frozen=True)
class LemmaRule:
    suffix: str
    replacement: str
    min_stem: int
    excluded_endings: tuple[str, ...] = ()

    def apply(self, token: str) -> str | None:
        if not token.endswith(self.suffix):
            return None
        if any(token.endswith(e) for e in self.excluded_endings):
            return None
        stem = token[: len(token) - len(self.suffix)]
        if len(stem) < self.min_stem:
            return None
        return stem + self.replacement


class Lemmatizer:
    def __init__(self, exceptions: dict[str, str], rules: Sequence[LemmaRule]):
        self.exceptions = dict(exceptions)
        self.rules = tuple(rules)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Lemmatizer":
        exceptions: dict[str, str] = {}
        rules: list[LemmaRule] = []
        for line in _data_lines("lemma_rules.txt", path):
            parts = line.split()
            if line.startswith("="):
                exceptions[parts[0][1:]] = parts[1]
                continue
            excluded: tuple[str, ...] = ()
            if len(parts) == 4 and parts[3].startswith("not:"):
                excluded = tuple(e for e in parts[3][4:].split(",") if e)
            elif len(parts) != 3:
                raise ValueError(f"bad lemma rule line: {line!r}")
            replacement = "" if parts[1] == "-" else parts[1]
            rules.append(LemmaRule(parts[0], replacement, int(parts[2]), excluded))
        return cls(exceptions, rules)

    def lemmatize(self, token: str) -> str:
        """One pass: an exception entry, else the first matching suffix rule."""
        if token in self.exceptions:
            return self.exceptions[token]
        for rule in self.rules:
            out = rule.apply(token)
            if out is not None:
                return out
        return token

    def lemma(self, token: str) -> str:
        """Apply :meth:`lemmatize` until the token is a fixed point."""
        for _ in range(len(token) + 1):
            nxt = self.lemmatize(token)
            if nxt == token:
                break
            token = nxt
        return token


class TextPipeline:
    def __init__(self, stopwords: frozenset[str] | None = None,
                 lemmatizer: Lemmatizer | None = None, drop_short: bool = True):
        self.stopwords = load_stopwords() if stopwords is None else frozenset(stopwords)
        self.lemmatizer = lemmatizer or Lemmatizer.load()
        self.drop_short = drop_short

    def _keep(self, token: str) -> bool:
        if token in self.stopwords:
            return False
        if self.drop_short and (len(token) < 2 or token.isdigit()):
            return False
        return bool(token)

    def preprocess(self, text: str) -> list[str]:
        text = _URL.sub(" ", text or "").lower()
        tokens = [t for t in _TOKEN.findall(text) if self._keep(t)]
        lemmas = (self.lemmatizer.lemma(t) for t in tokens)
        return [t for t in lemmas if self._keep(t)]


_DEFAULT: TextPipeline | None = None


def default_pipeline() -> TextPipeline:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = TextPipeline()
    return _DEFAULT


def preprocess(text: str) -> list[str]:
    return default_pipeline().preprocess(text)


def lemmatize(token: str) -> str:
    return default_pipeline().lemmatizer.lemmatize(token)


# --------------------------------------------------------------------------
# Documents and vocabulary
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledDocument:
    id: str
    merged_text: str
    relevance: int | None = None

    def __post_init__(self):
        if self.relevance not in (None, 0, 1):
            raise ValueError(f"relevance must be 0, 1 or None, got {self.relevance!r}")


def merge_fields(record: StudyRecord | None = None, *, title: str | None = None,
                 abstract: str | None = None) -> str:
    if record is not None:
        title, abstract = record.title, record.abstract
    title = (title or "").strip()
    if not title:
        raise MissingTitle("cannot merge fields without a title")
    abstract = (abstract or "").strip()
    return f"{title} {abstract}" if abstract else title


def record_id(record: StudyRecord) -> str:
    return record.doi or record.bib_key


def documents_from_records(records: Iterable[StudyRecord], relevance: int | None = None) -> list[LabeledDocument]:
    return [LabeledDocument(record_id(r), merge_fields(r), relevance) for r in records]


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index(self, token: str) -> int | None:
        return self._index.get(token)

    def as_dict(self) -> dict[str, int]:
        return dict(self._index)

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256("\n".join(self.tokens).encode("utf-8"))
        return h.hexdigest()[:16]


def build_vocabulary(training_docs: Sequence[LabeledDocument],
                     pipeline: TextPipeline | None = None) -> Vocabulary:
    if not training_docs:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    pipeline = pipeline or default_pipeline()
    seen: dict[str, None] = {}
    for doc in training_docs:
        for tok in pipeline.preprocess(doc.merged_text):
            seen.setdefault(tok, None)
    if not seen:
        raise EmptyVocabulary("training corpus produced no tokens")
    return Vocabulary(tuple(seen))


@dataclass(frozen=True)
class SparseDocVector:
    indices: tuple[int, ...]
    counts: tuple[int, ...]
    dim: int
    fingerprint: str = ""

    def __post_init__(self):
        if len(self.indices) != len(self.counts):
            raise ValueError("indices and counts differ in length")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if any(c < 1 for c in self.counts):
            raise ValueError("counts must be positive")
        if self.indices and not (0 <= self.indices[0] and self.indices[-1] < self.dim):
            raise ValueError("index out of range")

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.indices, self.counts))

    def total(self) -> int:
        return sum(self.counts)


def vectorize(tokens: Iterable[str], vocab: Vocabulary) -> SparseDocVector:
    counts: dict[int, int] = {}
    for tok in tokens:
        i = vocab.index(tok)
        if i is not None:
            counts[i] = counts.get(i, 0) + 1
    idx = tuple(sorted(counts))
    return SparseDocVector(idx, tuple(counts[i] for i in idx), len(vocab), vocab.fingerprint)


def vectorize_documents(docs: Sequence[LabeledDocument], vocab: Vocabulary,
                        pipeline: TextPipeline | None = None) -> list[SparseDocVector]:
    pipeline = pipeline or default_pipeline()
    return [vectorize(pipeline.preprocess(d.merged_text), vocab) for d in docs]


def to_matrix(vectors: Sequence[SparseDocVector], dim: int | None = None) -> sp.csr_matrix:
    if dim is None:
        dim = vectors[0].dim if vectors else 0
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(v.indices) for v in vectors])
    indices = np.fromiter((i for v in vectors for i in v.indices), dtype=np.int64, count=int(indptr[-1]))
    data = np.fromiter((c for v in vectors for c in v.counts), dtype=np.float64, count=int(indptr[-1]))
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


# --------------------------------------------------------------------------
# Labeled corpus CSV
# --------------------------------------------------------------------------

CORPUS_COLUMNS = ("id", "title", "abstract", "relevance")


def write_corpus_csv(records: Iterable[StudyRecord], relevance: int | None,
                     destination: str | Path | io.TextIOBase) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CORPUS_COLUMNS)
    for r in records:
        w.writerow([record_id(r), r.title, r.abstract or "", "" if relevance is None else relevance])
    if hasattr(destination, "write"):
        destination.write(buf.getvalue())
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_corpus_csv(source: str | Path) -> list[LabeledDocument]:
    try:
        with open(source, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CORPUS_COLUMNS:
                raise MalformedCsv(1, f"expected header {','.join(CORPUS_COLUMNS)}")
            docs = []
            for row in reader:
                rel = row["relevance"].strip()
                if rel not in ("", "0", "1"):
                    raise MalformedCsv(reader.line_num, f"bad relevance {rel!r}")
                docs.append(LabeledDocument(
                    row["id"],
                    merge_fields(title=row["title"], abstract=row["abstract"]),
                    int(rel) if rel else None,
                ))
            return docs
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
