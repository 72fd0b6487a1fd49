"""Iterative backward/forward snowballing over a citation provider.

Each direction keeps its own visited map and its own outputs.  Within an
iteration, provider calls may fan out over a thread pool, but every result is
merged in canonical DOI order before visited state changes, so the ledger and
BibTeX outputs do not depend on response timing.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import EmptySeedSet, MalformedBibTeX, ProviderError, ProviderUnavailable
from .providers.base import CitationNeighborhood, CitationProvider
from .records import (
    FAILURE_STATUSES,
    LEDGER_HEADER,
    STATUS_ABSTRACT_NOT_FOUND,
    STATUS_BIB_NOT_FOUND,
    STATUS_DOI_NOT_FOUND,
    STATUS_SUCCESS,
    LedgerRow,
    StudyRecord,
    build_reference_string,
    done_already,
    format_bibtex_entry,
    format_ledger_row,
    generate_bib_key,
    normalize_doi,
)

LOGGER = logging.getLogger(__name__)

DIRECTIONS = ("backward", "forward")
ITERATIONS_EXHAUSTED = "iterations_exhausted"
FRONTIER_EMPTY = "frontier_empty"

AbstractSource = Callable[[StudyRecord], "str | None"]


@dataclass(frozen=True)
class SnowballRequest:
    seeds: tuple[str, ...]
    directions: tuple[str, ...] = ("forward",)
    max_iterations: int = 1

    def __post_init__(self):
        seeds: list[str] = []
        for s in self.seeds:
            d = normalize_doi(s)
            if d not in seeds:
                seeds.append(d)
        if not seeds:
            raise EmptySeedSet("at least one seed DOI is required")
        object.__setattr__(self, "seeds", tuple(seeds))
        dirs = tuple(d for d in DIRECTIONS if d in set(self.directions))
        unknown = set(self.directions) - set(DIRECTIONS)
        if unknown or not dirs:
            raise ValueError(f"directions must be a nonempty subset of {DIRECTIONS}, got {self.directions!r}")
        object.__setattr__(self, "directions", dirs)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class DirectionResult:
    direction: str
    ledger: list[LedgerRow] = field(default_factory=list)
    records: list[StudyRecord] = field(default_factory=list)
    discovered_by_iteration: dict[int, list[str]] = field(default_factory=dict)
    stop_reason: str = ITERATIONS_EXHAUSTED
    iterations_run: int = 0

    @property
    def discoveries(self) -> list[str]:
        return [d for k in sorted(self.discovered_by_iteration) for d in self.discovered_by_iteration[k]]

    def counts(self) -> list[int]:
        return [len(self.discovered_by_iteration[k]) for k in sorted(self.discovered_by_iteration)]

    @property
    def has_failures(self) -> bool:
        return any(r.status in FAILURE_STATUSES for r in self.ledger)


@dataclass
class SnowballResult:
    seeds: tuple[str, ...]
    directions: dict[str, DirectionResult]

    def __getitem__(self, direction: str) -> DirectionResult:
        return self.directions[direction]

    @property
    def iterations_run(self) -> int:
        return max((r.iterations_run for r in self.directions.values()), default=0)

    @property
    def total_discoveries(self) -> int:
        return sum(len(r.discoveries) for r in self.directions.values())

    @property
    def has_failures(self) -> bool:
        return any(r.has_failures for r in self.directions.values())


@dataclass
class SeedExtraction:
    records: list[StudyRecord]
    ledger: list[LedgerRow]


def redundancy_check(doi: str, visited: dict[str, int]) -> int | None:
    """Iteration in which ``doi`` was first seen, or None."""
    return visited.get(normalize_doi(doi))


class _DirectionSink:
    """Appends ledger rows and BibTeX entries to ``<direction>.csv/.bib``."""

    def __init__(self, out_dir: Path, direction: str):
        out_dir.mkdir(parents=True, exist_ok=True)
        self.csv_path = out_dir / f"{direction}.csv"
        self.bib_path = out_dir / f"{direction}.bib"
        with open(self.csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(LEDGER_HEADER)
        self.bib_path.write_text("", encoding="utf-8")
        self._entries = 0

    def append(self, rows: Sequence[LedgerRow], records: Sequence[StudyRecord]):
        with open(self.csv_path, "a", encoding="utf-8", newline="") as fh:
            fh.write("".join(format_ledger_row(r) for r in rows))
        with open(self.bib_path, "a", encoding="utf-8", newline="") as fh:
            for rec in records:
                if self._entries:
                    fh.write("\n")
                fh.write(format_bibtex_entry(rec))
                self._entries += 1


def _reference_for(stub: StudyRecord) -> str:
    return build_reference_string(stub)


class Snowballer:
    def __init__(self, provider: CitationProvider, abstract_source: AbstractSource | None = None):
        self.provider = provider
        self.abstract_source = abstract_source or provider.fetch_abstract
        self.workers = max(1, int(getattr(provider, "parallelism", 1) or 1))
        self._neighborhoods: dict[str, CitationNeighborhood | Exception] = {}
        self._extractions: dict[str, tuple[StudyRecord | None, str]] = {}

    # -- provider access (memoized, fanned out) -------------------------------

    def _map(self, fn, items: list):
        if self.workers == 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))

    def _neighborhood(self, doi: str):
        try:
            return self.provider.fetch_neighborhood(doi)
        except ProviderError as exc:
            return exc

    def neighborhoods(self, dois: Sequence[str]) -> dict[str, CitationNeighborhood | Exception]:
        missing = [d for d in dois if d not in self._neighborhoods]
        for d, res in zip(missing, self._map(self._neighborhood, missing)):
            self._neighborhoods[d] = res
        return {d: self._neighborhoods[d] for d in dois}

    def _extract(self, doi: str) -> tuple[StudyRecord | None, str]:
        try:
            record = self.provider.fetch_bibtex(doi)
        except (ProviderError, MalformedBibTeX) as exc:
            LOGGER.debug("BibTeX for %s unavailable: %s", doi, exc)
            return None, STATUS_BIB_NOT_FOUND
        try:
            abstract = self.abstract_source(record)
        except ProviderError as exc:
            LOGGER.debug("abstract for %s unavailable: %s", doi, exc)
            abstract = None
        if abstract:
            return record.with_(abstract=abstract), STATUS_SUCCESS
        return record.with_(abstract=None), STATUS_ABSTRACT_NOT_FOUND

    def extract(self, dois: Sequence[str]) -> list[tuple[StudyRecord | None, str]]:
        missing = [d for d in dict.fromkeys(dois) if d not in self._extractions]
        for d, res in zip(missing, self._map(self._extract, missing)):
            self._extractions[d] = res
        return [self._extractions[d] for d in dois]

    def _resolve(self, reference: str) -> str | None:
        try:
            return self.provider.resolve_doi(reference)
        except ProviderError as exc:
            LOGGER.debug("DOI resolution failed for %r: %s", reference, exc)
            return None

    # -- main loop ---------------------------------------------------------------

    def run_direction(self, request: SnowballRequest, direction: str,
                      out_dir: Path | None = None) -> DirectionResult:
        result = DirectionResult(direction=direction)
        sink = _DirectionSink(out_dir, direction) if out_dir is not None else None
        visited: dict[str, int] = {seed: 1 for seed in request.seeds}
        taken_keys: set[str] = set()
        frontier = sorted(request.seeds)

        for k in range(1, request.max_iterations + 1):
            if not frontier:
                result.stop_reason = FRONTIER_EMPTY
                break
            hoods = self.neighborhoods(frontier)
            expandable = [d for d in frontier if isinstance(hoods[d], CitationNeighborhood)]
            for d in frontier:
                if not isinstance(hoods[d], CitationNeighborhood):
                    LOGGER.warning("[%s %d] cannot expand %s: %s", direction, k, d, hoods[d])
            if not expandable:
                if k == 1:
                    raise ProviderUnavailable(
                        f"none of the {len(frontier)} seeds could be fetched from the provider"
                    )
                LOGGER.warning(
                    "[%s] stopping before iteration %d of %d: no frontier study could be expanded",
                    direction, k, request.max_iterations,
                )
                result.stop_reason = FRONTIER_EMPTY
                break

            rows: list[LedgerRow | None] = []
            pending: list[tuple[int, str, str]] = []
            for d in expandable:
                for stub in hoods[d].stubs(direction):
                    reference = _reference_for(stub)
                    doi = stub.doi or self._resolve(reference)
                    if doi is None:
                        rows.append(LedgerRow(reference, None, STATUS_DOI_NOT_FOUND, k))
                        continue
                    prior = redundancy_check(doi, visited)
                    if prior is not None:
                        rows.append(LedgerRow(reference, doi, done_already(prior), k))
                        continue
                    visited[doi] = k
                    pending.append((len(rows), reference, doi))
                    rows.append(None)

            new_records: list[StudyRecord] = []
            discovered: list[str] = []
            extracted = self.extract([doi for _, _, doi in pending])
            for (slot, reference, doi), (record, status) in zip(pending, extracted):
                rows[slot] = LedgerRow(reference, doi, status, k)
                if record is not None:
                    key = generate_bib_key(record, taken_keys)
                    taken_keys.add(key)
                    new_records.append(record.with_(bib_key=key))
                    discovered.append(doi)

            final_rows = [r for r in rows if r is not None]
            for r in final_rows:
                LOGGER.info("[%s %d] %s: %s", direction, k, r.doi or r.reference, r.status)
            result.ledger.extend(final_rows)
            result.records.extend(new_records)
            result.discovered_by_iteration[k] = discovered
            result.iterations_run = k
            if sink is not None:
                sink.append(final_rows, new_records)
            frontier = sorted(discovered)
        else:
            result.stop_reason = FRONTIER_EMPTY if not frontier else ITERATIONS_EXHAUSTED

        if result.stop_reason == FRONTIER_EMPTY and result.iterations_run < request.max_iterations:
            LOGGER.warning(
                "[%s] stopped after %d of %d iterations (empty frontier)",
                direction, result.iterations_run, request.max_iterations,
            )
        return result

    def run(self, request: SnowballRequest, out_dir: str | Path | None = None) -> SnowballResult:
        out = Path(out_dir) if out_dir is not None else None
        return SnowballResult(
            seeds=request.seeds,
            directions={d: self.run_direction(request, d, out) for d in request.directions},
        )

    def seed_bibtex(self, seeds: Iterable[str]) -> SeedExtraction:
        dois = list(dict.fromkeys(normalize_doi(s) for s in seeds))
        if not dois:
            raise EmptySeedSet("at least one seed DOI is required")
        records: list[StudyRecord] = []
        ledger: list[LedgerRow] = []
        taken: set[str] = set()
        for doi, (record, status) in zip(dois, self.extract(dois)):
            reference = build_reference_string(record) if record is not None else doi
            ledger.append(LedgerRow(reference, doi, status, 1))
            if record is not None:
                key = generate_bib_key(record, taken)
                taken.add(key)
                records.append(record.with_(bib_key=key))
        return SeedExtraction(records=records, ledger=ledger)


def run_snowballing(request: SnowballRequest, provider: CitationProvider,
                    abstract_source: AbstractSource | None = None,
                    out_dir: str | Path | None = None) -> SnowballResult:
    """Run every requested direction and, if ``out_dir`` is given, write
    ``<direction>.csv`` and ``<direction>.bib`` there as iterations finish."""
    return Snowballer(provider, abstract_source).run(request, out_dir)


def seed_bibtex(seeds: Iterable[str], provider: CitationProvider,
                abstract_source: AbstractSource | None = None) -> SeedExtraction:
    return Snowballer(provider, abstract_source).seed_bibtex(seeds)
