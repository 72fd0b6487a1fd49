from .base import (
    SIMILARITY_THRESHOLD,
    CitationNeighborhood,
    CitationProvider,
    ProviderConfig,
    canonical_stubs,
    jaccard,
)
from .fixture import FixtureProvider
from .live import LiveProvider, RateLimiter

__all__ = [
    "SIMILARITY_THRESHOLD",
    "CitationNeighborhood",
    "CitationProvider",
    "ProviderConfig",
    "canonical_stubs",
    "jaccard",
    "FixtureProvider",
    "LiveProvider",
    "RateLimiter",
]
