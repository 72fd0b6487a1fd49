from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

from ..errors import MalformedResponse
from ..records import StudyRecord

SIMILARITY_THRESHOLD = 0.6


@dataclass(frozen=True)
class CitationNeighborhood:
    subject: StudyRecord
    references: tuple[StudyRecord, ...]
    citations: tuple[StudyRecord, ...]

    def __post_init__(self):
        if self.subject.doi is None:
            raise MalformedResponse("neighborhood subject has no DOI")
        object.__setattr__(self, "references", canonical_stubs(self.references))
        object.__setattr__(self, "citations", canonical_stubs(self.citations))

    def stubs(self, direction: str) -> tuple[StudyRecord, ...]:
        if direction == "backward":
            return self.references
        if direction == "forward":
            return self.citations
        raise ValueError(f"unknown direction {direction!r}")


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = "https://api.semanticscholar.org/graph/v1"
    api_key: str | None = None
    max_retries: int = 3
    request_timeout: float = 30.0
    rate_limit: float = 1.0
    parallelism: int = 1
    crossref_url: str = "https://api.crossref.org"
    doi_resolver_url: str = "https://doi.org"

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if not self.rate_limit > 0:
            raise ValueError("rate_limit must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@runtime_checkable
class CitationProvider(Protocol):
    parallelism: int

    def fetch_neighborhood(self, doi: str) -> CitationNeighborhood: ...

    def resolve_doi(self, reference: str) -> str | None: ...

    def fetch_bibtex(self, doi: str) -> StudyRecord: ...

    def fetch_abstract(self, record: StudyRecord) -> str | None: ...


def _stub_sort_key(stub: StudyRecord):
    return (stub.doi is None, stub.doi or "", stub.title)


def canonical_stubs(stubs: Sequence[StudyRecord]) -> tuple[StudyRecord, ...]:
    """Deduplicate by DOI and sort: DOI-bearing first, then DOI, then title."""
    seen: set[str] = set()
    kept = []
    for stub in stubs:
        if stub.doi is not None:
            if stub.doi in seen:
                continue
            seen.add(stub.doi)
        kept.append(stub)
    return tuple(sorted(kept, key=_stub_sort_key))


def reference_tokens(reference: str) -> frozenset[str]:
    return frozenset(re.findall(r"[0-9a-z]+", reference.lower()))


def jaccard(a: str, b: str) -> float:
    ta, tb = reference_tokens(a), reference_tokens(b)
    if not ta and not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)
