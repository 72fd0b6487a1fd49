"""Citation snowballing and screening classifiers for literature review updates."""

from .errors import SlrUpdateError
from .records import LedgerRow, StudyRecord, normalize_doi, parse_bibtex, serialize_bibtex
from .snowball import SnowballRequest, SnowballResult, run_snowballing

__version__ = "0.1.0"

__all__ = [
    "LedgerRow",
    "SlrUpdateError",
    "SnowballRequest",
    "SnowballResult",
    "StudyRecord",
    "normalize_doi",
    "parse_bibtex",
    "run_snowballing",
    "serialize_bibtex",
]
