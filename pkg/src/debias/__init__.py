"""Review score prediction from text with per-user rating-bias removal."""

__version__ = "0.1.0"
