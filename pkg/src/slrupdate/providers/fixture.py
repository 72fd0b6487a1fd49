"""Offline provider backed by a single JSON "world" file.

Layout::

    {
      "format": "slrupdate-fixture",
      "version": 1,
      "works": {
        "<doi>": {
          "metadata": {"title": ..., "authors": [...], "venue": ..., "year": ...},
          "references": [<stub>, ...],
          "citations": [<stub>, ...],
          "bibtex": "<BibTeX text>",      # optional
          "abstract": "<text>"           # optional
        }
      },
      "reference_index": {"<reference string>": "<doi>"}
    }

A stub is a metadata object that may also carry ``doi``.  A work without
``metadata`` is unknown to the citation graph (``fetch_neighborhood`` raises
``NotFound``) but may still serve BibTeX and abstracts.
"""

from __future__ import annotations

import json
import threading
from collections import Counter
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigError, MalformedResponse, NotFound
from ..records import StudyRecord, normalize_doi, parse_bibtex
from .base import SIMILARITY_THRESHOLD, CitationNeighborhood, reference_tokens

FIXTURE_FORMAT = "slrupdate-fixture"


def stub_from_json(data: Mapping[str, Any]) -> StudyRecord:
    try:
        return StudyRecord(
            title=data["title"],
            doi=data.get("doi"),
            abstract=data.get("abstract"),
            authors=tuple(data.get("authors") or ()),
            venue=data.get("venue"),
            year=data.get("year"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedResponse(f"bad stub {data!r}: {exc}") from exc


def stub_to_json(record: StudyRecord) -> dict[str, Any]:
    out: dict[str, Any] = {}
    if record.doi:
        out["doi"] = record.doi
    out["title"] = record.title
    if record.authors:
        out["authors"] = list(record.authors)
    if record.venue:
        out["venue"] = record.venue
    if record.year is not None:
        out["year"] = record.year
    return out


class FixtureProvider:
    """Deterministic stand-in for the live services.  Never touches the network."""

    def __init__(self, world: Mapping[str, Any], parallelism: int = 1):
        if world.get("format", FIXTURE_FORMAT) != FIXTURE_FORMAT:
            raise ConfigError(f"not a fixture world: format={world.get('format')!r}")
        self.parallelism = parallelism
        self._works = {normalize_doi(k): v for k, v in world.get("works", {}).items()}
        self._index = {ref: normalize_doi(doi) for ref, doi in world.get("reference_index", {}).items()}
        # Sorted so that similarity ties resolve the same way on every run.
        self._index_tokens = sorted(
            (ref, reference_tokens(ref), doi) for ref, doi in self._index.items()
        )
        self._titles = {
            " ".join(w["metadata"]["title"].lower().split()): doi
            for doi, w in sorted(self._works.items())
            if w.get("metadata", {}).get("title")
        }
        self._lock = threading.Lock()
        self.calls: Counter[str] = Counter()

    @classmethod
    def from_file(cls, path: str | Path, parallelism: int = 1) -> "FixtureProvider":
        try:
            world = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read fixture {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"fixture {path} is not valid JSON: {exc}") from exc
        return cls(world, parallelism=parallelism)

    def _count(self, op: str):
        with self._lock:
            self.calls[op] += 1

    def fetch_neighborhood(self, doi: str) -> CitationNeighborhood:
        self._count("fetch_neighborhood")
        doi = normalize_doi(doi)
        work = self._works.get(doi)
        if not work or "metadata" not in work:
            raise NotFound(doi)
        subject = stub_from_json({**work["metadata"], "doi": doi})
        return CitationNeighborhood(
            subject=subject,
            references=tuple(stub_from_json(s) for s in work.get("references", ())),
            citations=tuple(stub_from_json(s) for s in work.get("citations", ())),
        )

    def resolve_doi(self, reference: str) -> str | None:
        self._count("resolve_doi")
        if reference in self._index:
            return self._index[reference]
        query = reference_tokens(reference)
        if not query:
            return None
        best_score, best_doi = 0.0, None
        for _, tokens, doi in self._index_tokens:
            union = len(query | tokens)
            score = len(query & tokens) / union if union else 0.0
            if score > best_score:
                best_score, best_doi = score, doi
        return best_doi if best_score >= SIMILARITY_THRESHOLD else None

    def fetch_bibtex(self, doi: str) -> StudyRecord:
        self._count("fetch_bibtex")
        doi = normalize_doi(doi)
        payload = self._works.get(doi, {}).get("bibtex")
        if not payload:
            raise NotFound(doi)
        records = parse_bibtex(payload)
        if not records:
            raise NotFound(doi)
        return records[0].with_(doi=doi)

    def fetch_abstract(self, record: StudyRecord) -> str | None:
        if record.abstract:
            return record.abstract
        self._count("fetch_abstract")
        doi = record.doi
        if doi is None:
            doi = self._titles.get(" ".join(record.title.lower().split()))
        if doi is None:
            return None
        return self._works.get(doi, {}).get("abstract") or None
