"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SlrUpdateError(Exception):
    """Base class for all errors raised by this package."""


# --- records -------------------------------------------------------------


class MalformedBibTeX(SlrUpdateError):
    def __init__(self, position: int, reason: str = "malformed entry"):
        super().__init__(f"{reason} at offset {position}")
        self.position = position
        self.reason = reason


class UnsupportedEncoding(SlrUpdateError):
    pass


class DuplicateKey(SlrUpdateError):
    def __init__(self, key: str):
        super().__init__(f"duplicate BibTeX key {key!r}")
        self.key = key


class MissingTitle(SlrUpdateError, ValueError):
    pass


class InvalidDOI(SlrUpdateError, ValueError):
    pass


class MalformedCsv(SlrUpdateError):
    def __init__(self, line: int, reason: str = "malformed row"):
        super().__init__(f"{reason} (line {line})")
        self.line = line
        self.reason = reason


class IoFailure(SlrUpdateError, OSError):
    pass


# --- providers -----------------------------------------------------------


class ProviderError(SlrUpdateError):
    pass


class NotFound(ProviderError):
    def __init__(self, doi: str):
        super().__init__(f"not found: {doi}")
        self.doi = doi


class RateLimited(ProviderError):
    def __init__(self, retry_after: float | None = None):
        super().__init__(f"rate limited (retry after {retry_after})")
        self.retry_after = retry_after


class NetworkFailure(ProviderError):
    pass


class MalformedResponse(ProviderError):
    pass


class ProviderUnavailable(ProviderError):
    """Raised when no seed at all could be expanded."""


# --- snowballing ---------------------------------------------------------


class EmptySeedSet(SlrUpdateError, ValueError):
    pass


# --- text / classifiers --------------------------------------------------


class EmptyCorpus(SlrUpdateError, ValueError):
    pass


class EmptyVocabulary(SlrUpdateError, ValueError):
    pass


class SingleClassCorpus(SlrUpdateError, ValueError):
    pass


class DimensionMismatch(SlrUpdateError, ValueError):
    pass


class VocabularyMismatch(SlrUpdateError, ValueError):
    pass


class UnreachableRecall(SlrUpdateError, ValueError):
    pass


class LengthMismatch(SlrUpdateError, ValueError):
    pass


class ZeroFlagged(SlrUpdateError, ValueError):
    pass


class ConfigError(SlrUpdateError):
    pass
