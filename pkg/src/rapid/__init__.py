"""Text-based video event retrieval: drafting, parallel top-k search, re-ranking."""

__version__ = "0.1.0"
