"""Bibliographic records, BibTeX I/O, reference strings and the CSV ledger.

The BibTeX dialect handled here is deliberately small: brace-delimited
values (plus quoted strings and bare tokens, which DOI content-negotiation
endpoints emit for fields like ``month``), no ``@string`` macros and no
``#`` concatenation.
"""

from __future__ import annotations

import csv
import io
import re
import unicodedata
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO, Iterable, Sequence

from .errors import (
    DuplicateKey,
    InvalidDOI,
    IoFailure,
    MalformedBibTeX,
    MalformedCsv,
    MissingTitle,
    UnsupportedEncoding,
)

__all__ = [
    "StudyRecord",
    "LedgerRow",
    "STATUS_SUCCESS",
    "STATUS_DOI_NOT_FOUND",
    "STATUS_BIB_NOT_FOUND",
    "STATUS_ABSTRACT_NOT_FOUND",
    "FAILURE_STATUSES",
    "done_already",
    "normalize_doi",
    "parse_bibtex",
    "serialize_bibtex",
    "format_bibtex_entry",
    "build_reference_string",
    "generate_bib_key",
    "LEDGER_HEADER",
    "format_ledger_row",
    "write_ledger",
    "read_ledger",
]

STATUS_SUCCESS = "Extraction successful"
STATUS_DOI_NOT_FOUND = "DOI not found"
STATUS_BIB_NOT_FOUND = ".bib file not found"
STATUS_ABSTRACT_NOT_FOUND = "Abstract not found"
_DONE_ALREADY = re.compile(r"^Done already in ([1-9][0-9]*)$")

# Rows with these statuses mean a study was lost; "Abstract not found" keeps
# the record and is only a warning.
FAILURE_STATUSES = frozenset({STATUS_DOI_NOT_FOUND, STATUS_BIB_NOT_FOUND})

_DOI_PREFIX = re.compile(
    r"^(?:doi:\s*|https?://(?:dx\.)?doi\.org/|(?:dx\.)?doi\.org/)", re.IGNORECASE
)


def done_already(iteration: int) -> str:
    return f"Done already in {iteration}"


def normalize_doi(doi: str) -> str:
    """Canonical DOI form: lowercase, no scheme/host, surrounding space removed.

    >>> normalize_doi("https://doi.org/10.1145/ABC.123")
    '10.1145/abc.123'
    """
    text = doi.strip()
    while True:
        stripped = _DOI_PREFIX.sub("", text, count=1).strip()
        if stripped == text:
            break
        text = stripped
    text = text.lower()
    if not text.startswith("10.") or "/" not in text or any(c.isspace() for c in text):
        raise InvalidDOI(f"not a DOI: {doi!r}")
    return text


def _clean(value: str | None) -> str | None:
    if value is None:
        return None
    value = " ".join(value.split())
    return value or None


@dataclass(frozen=True)
class StudyRecord:
    title: str
    doi: str | None = None
    abstract: str | None = None
    authors: tuple[str, ...] = ()
    venue: str | None = None
    year: int | None = None
    bib_key: str = ""
    entry_type: str = "article"

    def __post_init__(self):
        if self.title is None or not self.title.strip():
            raise MissingTitle("study record needs a nonempty title")
        if not isinstance(self.authors, tuple):
            object.__setattr__(self, "authors", tuple(self.authors))
        if self.doi is not None:
            object.__setattr__(self, "doi", normalize_doi(self.doi))

    def with_(self, **changes) -> "StudyRecord":
        return replace(self, **changes)


@dataclass(frozen=True)
class LedgerRow:
    reference: str
    doi: str | None
    status: str
    iteration: int

    def __post_init__(self):
        if self.doi is not None:
            object.__setattr__(self, "doi", normalize_doi(self.doi))
        if not is_valid_status(self.status):
            raise ValueError(f"unknown ledger status {self.status!r}")
        if self.status == STATUS_SUCCESS and self.doi is None:
            raise ValueError("a successful extraction must carry a DOI")
        if isinstance(self.iteration, bool) or not isinstance(self.iteration, int) or self.iteration < 1:
            raise ValueError(f"iteration must be an integer >= 1, got {self.iteration!r}")

    @property
    def done_in(self) -> int | None:
        m = _DONE_ALREADY.match(self.status)
        return int(m.group(1)) if m else None


def is_valid_status(status: str) -> bool:
    return status in (
        STATUS_SUCCESS,
        STATUS_DOI_NOT_FOUND,
        STATUS_BIB_NOT_FOUND,
        STATUS_ABSTRACT_NOT_FOUND,
    ) or bool(_DONE_ALREADY.match(status))


# --------------------------------------------------------------------------
# BibTeX parsing
# --------------------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_\-:.]*")
_SKIPPED_TYPES = {"comment", "preamble", "string"}


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def ident(self) -> str:
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise MalformedBibTeX(self.pos, "expected an identifier")
        self.pos = m.end()
        return m.group(0)

    def braced(self) -> str:
        # Called with self.pos on the opening brace.
        start = self.pos
        depth = 0
        i = self.pos
        text = self.text
        while i < len(text):
            c = text[i]
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    self.pos = i + 1
                    return text[start + 1 : i]
            i += 1
        raise MalformedBibTeX(start, "unbalanced braces")

    def quoted(self) -> str:
        start = self.pos
        depth = 0
        i = self.pos + 1
        text = self.text
        while i < len(text):
            c = text[i]
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
            elif c == '"' and depth == 0:
                self.pos = i + 1
                return text[start + 1 : i]
            i += 1
        raise MalformedBibTeX(start, "unterminated quoted value")

    def bare(self) -> str:
        m = re.compile(r"[^\s,{}\"=]+").match(self.text, self.pos)
        if not m:
            raise MalformedBibTeX(self.pos, "expected a field value")
        self.pos = m.end()
        return m.group(0)


def _parse_entry(sc: _Scanner, entry_type: str, at: int) -> tuple[str, dict[str, str]]:
    sc.skip_ws()
    if sc.peek() != "{":
        raise MalformedBibTeX(sc.pos, "expected '{' after entry type")
    sc.pos += 1
    sc.skip_ws()
    key_start = sc.pos
    while not sc.eof() and sc.peek() not in ",}=" and not sc.peek().isspace():
        sc.pos += 1
    key = sc.text[key_start : sc.pos]
    sc.skip_ws()
    if sc.eof():
        raise MalformedBibTeX(at, "unbalanced braces")
    if not key or sc.peek() != ",":
        raise MalformedBibTeX(key_start, "entry without key")
    fields: dict[str, str] = {}
    while True:
        sc.skip_ws()
        while sc.peek() == ",":
            sc.pos += 1
            sc.skip_ws()
        if sc.eof():
            raise MalformedBibTeX(at, "unbalanced braces")
        if sc.peek() == "}":
            sc.pos += 1
            return key, fields
        name = sc.ident().lower()
        sc.skip_ws()
        if sc.peek() != "=":
            if sc.eof():
                raise MalformedBibTeX(at, "unbalanced braces")
            raise MalformedBibTeX(sc.pos, f"expected '=' after field {name!r}")
        sc.pos += 1
        sc.skip_ws()
        c = sc.peek()
        if c == "{":
            value = sc.braced()
        elif c == '"':
            value = sc.quoted()
        elif c == "":
            raise MalformedBibTeX(at, "unbalanced braces")
        else:
            value = sc.bare()
        fields.setdefault(name, value)


def _record_from_fields(key: str, entry_type: str, fields: dict[str, str], at: int) -> StudyRecord:
    title = _clean(fields.get("title"))
    if title is None:
        raise MalformedBibTeX(at, f"entry {key!r} has no title")
    authors: tuple[str, ...] = ()
    if _clean(fields.get("author")):
        authors = tuple(
            a for a in (_clean(p) for p in re.split(r"\s+and\s+", fields["author"].strip())) if a
        )
    venue = None
    for name in ("venue", "journal", "booktitle"):
        venue = _clean(fields.get(name))
        if venue:
            break
    year = None
    raw_year = _clean(fields.get("year"))
    if raw_year is not None and re.fullmatch(r"-?\d+", raw_year):
        year = int(raw_year)
    doi = None
    raw_doi = _clean(fields.get("doi"))
    if raw_doi:
        try:
            doi = normalize_doi(raw_doi)
        except InvalidDOI:
            doi = None
    return StudyRecord(
        title=title,
        doi=doi,
        abstract=_clean(fields.get("abstract")),
        authors=authors,
        venue=venue,
        year=year,
        bib_key=key,
        entry_type=entry_type.lower(),
    )


def parse_bibtex(text: str | bytes) -> list[StudyRecord]:
    """Parse BibTeX text into records, one per entry, in file order."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise UnsupportedEncoding(f"BibTeX input is not valid UTF-8: {exc}") from exc
    sc = _Scanner(text)
    records: list[StudyRecord] = []
    while True:
        at = text.find("@", sc.pos)
        if at < 0:
            return records
        sc.pos = at + 1
        entry_type = sc.ident()
        if entry_type.lower() in _SKIPPED_TYPES:
            sc.skip_ws()
            if sc.peek() == "{":
                sc.braced()
            continue
        key, fields = _parse_entry(sc, entry_type, at)
        records.append(_record_from_fields(key, entry_type, fields, at))


def read_bibtex_file(path: str | Path) -> list[StudyRecord]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return parse_bibtex(data)


# --------------------------------------------------------------------------
# BibTeX serialization
# --------------------------------------------------------------------------


def _balanced(value: str) -> bool:
    depth = 0
    for c in value:
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def _brace_safe(value: str) -> str:
    if _balanced(value):
        return value
    return value.replace("{", "(").replace("}", ")")


def format_bibtex_entry(record: StudyRecord) -> str:
    lines = [f"@{record.entry_type}{{{record.bib_key},"]
    fields: list[tuple[str, str]] = []
    if record.authors:
        fields.append(("author", " and ".join(record.authors)))
    fields.append(("title", record.title))
    if record.venue:
        fields.append(("venue", record.venue))
    if record.year is not None:
        fields.append(("year", str(record.year)))
    if record.doi:
        fields.append(("doi", record.doi))
    if record.abstract:
        fields.append(("abstract", record.abstract))
    lines.extend(f"  {name} = {{{_brace_safe(value)}}}," for name, value in fields)
    lines[-1] = lines[-1].rstrip(",")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_bibtex(records: Sequence[StudyRecord]) -> str:
    seen: set[str] = set()
    for r in records:
        if not r.bib_key:
            raise ValueError(f"record {r.title!r} has no bib_key")
        if r.bib_key in seen:
            raise DuplicateKey(r.bib_key)
        seen.add(r.bib_key)
    return "\n".join(format_bibtex_entry(r) for r in records)


def write_bibtex_file(records: Sequence[StudyRecord], path: str | Path) -> None:
    try:
        Path(path).write_text(serialize_bibtex(records), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


# --------------------------------------------------------------------------
# Reference strings and keys
# --------------------------------------------------------------------------


def build_reference_string(record: StudyRecord) -> str:
    """Chicago-like reference: ``Authors. "Title." Venue (Year).``

    Absent components are dropped together with their separators.
    """
    title = (record.title or "").strip()
    if not title:
        raise MissingTitle("cannot build a reference string without a title")
    parts = []
    if record.authors:
        names = ", ".join(record.authors)
        parts.append(names if names.endswith(".") else names + ".")
    parts.append(f'"{title}."')
    tail = []
    if record.venue:
        tail.append(record.venue)
    if record.year is not None:
        tail.append(f"({record.year})")
    if tail:
        parts.append(" ".join(tail) + ".")
    return " ".join(parts)


def _ascii_word(text: str) -> str:
    folded = unicodedata.normalize("NFKD", text).encode("ascii", "ignore").decode("ascii")
    return re.sub(r"[^a-z0-9]", "", folded.lower())


def _family_name(author: str) -> str:
    if "," in author:
        return author.split(",", 1)[0]
    tokens = author.split()
    return tokens[-1] if tokens else ""


def generate_bib_key(record: StudyRecord, taken: set[str] | None = None) -> str:
    """First author's family name + year + first title word, lowercased.

    A ``_2``, ``_3``... suffix is added when the key is already in ``taken``.
    """
    family = _ascii_word(_family_name(record.authors[0])) if record.authors else ""
    year = str(record.year) if record.year is not None else ""
    first_word = ""
    for token in record.title.split():
        first_word = _ascii_word(token)
        if first_word:
            break
    base = f"{family}{year}{first_word}" or "ref"
    if taken is None or base not in taken:
        return base
    n = 2
    while f"{base}_{n}" in taken:
        n += 1
    return f"{base}_{n}"


# --------------------------------------------------------------------------
# CSV ledger
# --------------------------------------------------------------------------

LEDGER_COLUMNS = ("reference", "doi", "status", "iteration")
LEDGER_HEADER = ",".join(LEDGER_COLUMNS) + "\r\n"


def format_ledger_row(row: LedgerRow) -> str:
    # The reference column is always quoted; the rest use minimal quoting.
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerow(
        [row.doi or "", row.status, str(row.iteration)]
    )
    quoted_ref = '"' + row.reference.replace('"', '""') + '"'
    return quoted_ref + "," + buf.getvalue()


def write_ledger(rows: Iterable[LedgerRow], destination: str | Path | IO[str]) -> None:
    body = LEDGER_HEADER + "".join(format_ledger_row(r) for r in rows)
    if hasattr(destination, "write"):
        destination.write(body)
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_ledger(source: str | Path | IO[str]) -> list[LedgerRow]:
    if hasattr(source, "read"):
        text = source.read()
    else:
        try:
            with open(source, encoding="utf-8", newline="") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedCsv(1, "missing header") from None
    except csv.Error as exc:
        raise MalformedCsv(1, str(exc)) from exc
    if tuple(header) != LEDGER_COLUMNS:
        raise MalformedCsv(1, f"unexpected header {header!r}")
    rows: list[LedgerRow] = []
    try:
        for fields in reader:
            line = reader.line_num
            if len(fields) != 4:
                raise MalformedCsv(line, f"expected 4 columns, got {len(fields)}")
            reference, doi, status, iteration = fields
            if not re.fullmatch(r"[0-9]+", iteration):
                raise MalformedCsv(line, f"bad iteration {iteration!r}")
            try:
                rows.append(LedgerRow(reference, doi or None, status, int(iteration)))
            except ValueError as exc:
                raise MalformedCsv(line, str(exc)) from exc
    except csv.Error as exc:
        raise MalformedCsv(reader.line_num, str(exc)) from exc
    return rows
