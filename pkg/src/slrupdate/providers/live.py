"""HTTP-backed provider: Semantic Scholar graph, CrossRef search, DOI content negotiation.

Every outgoing request goes through one :class:`RequestGate`, which caps the
number of requests in flight and spaces request starts to respect the
configured rate.  Transient failures (connection errors, 5xx, 429) are retried
with exponential backoff; a 404 is final.
"""

from __future__ import annotations

import logging
import os
import random
import threading
import time
from dataclasses import replace
from typing import Any, Callable, Mapping

import requests

from ..errors import InvalidDOI, MalformedResponse, MissingTitle, NetworkFailure, NotFound, RateLimited
from ..records import StudyRecord, build_reference_string, normalize_doi, parse_bibtex
from .base import SIMILARITY_THRESHOLD, CitationNeighborhood, ProviderConfig, jaccard

LOGGER = logging.getLogger(__name__)

API_KEY_ENV = "CITATION_API_KEY"
BACKOFF_BASE = 0.5
BACKOFF_CAP = 8.0
_S2_FIELDS = "title,authors,venue,year,externalIds"
_PAGE = 1000


class RateLimiter:
    """Spaces request starts at least ``1 / rate`` seconds apart.

    Slots are reserved under a lock and slept on outside it, so concurrent
    callers queue up fairly without holding the lock while waiting.
    """

    def __init__(self, rate: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if not rate > 0:
            raise ValueError("rate must be > 0")
        self.interval = 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._next = float("-inf")
        self._lock = threading.Lock()

    def acquire(self) -> float:
        with self._lock:
            now = self._clock()
            start = max(now, self._next)
            self._next = start + self.interval
        if start > now:
            self._sleep(start - now)
        return start


class RequestGate:
    def __init__(self, config: ProviderConfig, clock=time.monotonic, sleep=time.sleep):
        self.limiter = RateLimiter(config.rate_limit, clock=clock, sleep=sleep)
        self._slots = threading.BoundedSemaphore(config.parallelism)

    def __enter__(self):
        self._slots.acquire()
        try:
            self.limiter.acquire()
        except BaseException:
            self._slots.release()
            raise
        return self

    def __exit__(self, *exc):
        self._slots.release()
        return False


def backoff_delay(attempt: int, rng: random.Random) -> float:
    ceiling = min(BACKOFF_CAP, BACKOFF_BASE * (2 ** attempt))
    return ceiling / 2 + rng.uniform(0, ceiling / 2)


def _s2_stub(paper: Mapping[str, Any] | None) -> StudyRecord | None:
    if not paper or not (paper.get("title") or "").strip():
        return None
    doi = (paper.get("externalIds") or {}).get("DOI")
    try:
        doi = normalize_doi(doi) if doi else None
    except InvalidDOI:
        doi = None
    return StudyRecord(
        title=paper["title"],
        doi=doi,
        abstract=paper.get("abstract") or None,
        authors=tuple(a["name"] for a in paper.get("authors") or () if a.get("name")),
        venue=paper.get("venue") or None,
        year=paper.get("year"),
    )


def _crossref_stub(item: Mapping[str, Any]) -> StudyRecord | None:
    titles = item.get("title") or []
    if not titles or not titles[0].strip():
        return None
    authors = []
    for a in item.get("author") or ():
        name = " ".join(p for p in (a.get("given"), a.get("family")) if p)
        if name:
            authors.append(name)
    year = None
    for key in ("issued", "published-print", "published-online"):
        parts = (item.get(key) or {}).get("date-parts") or [[None]]
        if parts and parts[0] and parts[0][0]:
            year = int(parts[0][0])
            break
    venues = item.get("container-title") or []
    return StudyRecord(
        title=titles[0],
        authors=tuple(authors),
        venue=venues[0] if venues else None,
        year=year,
    )


class LiveProvider:
    def __init__(
        self,
        config: ProviderConfig | None = None,
        session: Any = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        config = config or ProviderConfig()
        if config.api_key is None and os.environ.get(API_KEY_ENV):
            config = replace(config, api_key=os.environ[API_KEY_ENV])
        self.config = config
        self.parallelism = config.parallelism
        self.session = session if session is not None else requests.Session()
        self.gate = RequestGate(config, clock=clock, sleep=sleep)
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._abstracts: dict[str, str | None] = {}
        self._abstract_lock = threading.Lock()

    # -- transport ---------------------------------------------------------

    def _get(self, url: str, params: Mapping[str, Any] | None = None,
             headers: Mapping[str, str] | None = None, subject: str = ""):
        last: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                wait = backoff_delay(attempt - 1, self._rng)
                if isinstance(last, RateLimited) and last.retry_after is not None:
                    wait = max(wait, last.retry_after)
                self._sleep(wait)
            try:
                with self.gate:
                    resp = self.session.get(
                        url, params=params, headers=dict(headers or {}),
                        timeout=self.config.request_timeout,
                    )
            except requests.RequestException as exc:
                last = NetworkFailure(f"{url}: {exc}")
                LOGGER.debug("attempt %d for %s failed: %s", attempt + 1, url, exc)
                continue
            status = resp.status_code
            if status == 404:
                raise NotFound(subject or url)
            if status == 429:
                retry_after = resp.headers.get("Retry-After")
                try:
                    last = RateLimited(float(retry_after) if retry_after else None)
                except ValueError:
                    last = RateLimited(None)
                continue
            if status >= 500:
                last = NetworkFailure(f"{url}: HTTP {status}")
                continue
            if status >= 400:
                raise MalformedResponse(f"{url}: HTTP {status}")
            return resp
        raise NetworkFailure(f"{url}: giving up after {self.config.max_retries + 1} attempts ({last})")

    def _json(self, resp) -> Any:
        try:
            return resp.json()
        except ValueError as exc:
            raise MalformedResponse(f"invalid JSON: {exc}") from exc

    def _s2_headers(self) -> dict[str, str]:
        return {"x-api-key": self.config.api_key} if self.config.api_key else {}

    # -- provider operations -------------------------------------------------

    def _paged(self, doi: str, edge: str, key: str) -> list[StudyRecord]:
        stubs: list[StudyRecord] = []
        offset = 0
        while True:
            data = self._json(self._get(
                f"{self.config.base_url}/paper/DOI:{doi}/{edge}",
                params={"fields": _S2_FIELDS, "limit": _PAGE, "offset": offset},
                headers=self._s2_headers(), subject=doi,
            ))
            if not isinstance(data, dict) or not isinstance(data.get("data"), list):
                raise MalformedResponse(f"unexpected {edge} payload for {doi}")
            for item in data["data"]:
                stub = _s2_stub(item.get(key))
                if stub is not None:
                    stubs.append(stub)
            if data.get("next") is None:
                return stubs
            offset = int(data["next"])

    def fetch_neighborhood(self, doi: str) -> CitationNeighborhood:
        doi = normalize_doi(doi)
        meta = self._json(self._get(
            f"{self.config.base_url}/paper/DOI:{doi}",
            params={"fields": _S2_FIELDS + ",abstract"},
            headers=self._s2_headers(), subject=doi,
        ))
        if not isinstance(meta, dict):
            raise MalformedResponse(f"unexpected paper payload for {doi}")
        subject = _s2_stub(meta)
        if subject is None:
            raise MalformedResponse(f"paper {doi} has no title")
        subject = subject.with_(doi=doi)
        with self._abstract_lock:
            self._abstracts[doi] = subject.abstract
        return CitationNeighborhood(
            subject=subject,
            references=tuple(self._paged(doi, "references", "citedPaper")),
            citations=tuple(self._paged(doi, "citations", "citingPaper")),
        )

    def resolve_doi(self, reference: str) -> str | None:
        data = self._json(self._get(
            f"{self.config.crossref_url}/works",
            params={"query.bibliographic": reference, "rows": 1},
        ))
        try:
            items = data["message"]["items"]
        except (KeyError, TypeError) as exc:
            raise MalformedResponse(f"unexpected CrossRef payload: {exc}") from exc
        if not items:
            return None
        hit = items[0]
        stub = _crossref_stub(hit)
        if stub is None or not hit.get("DOI"):
            return None
        if jaccard(reference, build_reference_string(stub)) < SIMILARITY_THRESHOLD:
            return None
        try:
            return normalize_doi(hit["DOI"])
        except InvalidDOI:
            return None

    def fetch_bibtex(self, doi: str) -> StudyRecord:
        doi = normalize_doi(doi)
        resp = self._get(
            f"{self.config.doi_resolver_url}/{doi}",
            headers={"Accept": "application/x-bibtex; charset=utf-8"}, subject=doi,
        )
        content = resp.content if isinstance(resp.content, bytes) else resp.text
        try:
            records = parse_bibtex(content)
        except MissingTitle as exc:
            raise MalformedResponse(str(exc)) from exc
        if not records:
            raise NotFound(doi)
        return records[0].with_(doi=doi)

    def fetch_abstract(self, record: StudyRecord) -> str | None:
        if record.abstract:
            return record.abstract
        if record.doi is None:
            return None
        with self._abstract_lock:
            if record.doi in self._abstracts:
                return self._abstracts[record.doi]
        try:
            meta = self._json(self._get(
                f"{self.config.base_url}/paper/DOI:{record.doi}",
                params={"fields": "abstract"}, headers=self._s2_headers(), subject=record.doi,
            ))
        except NotFound:
            meta = {}
        abstract = (meta or {}).get("abstract") or None
        with self._abstract_lock:
            self._abstracts[record.doi] = abstract
        return abstract
