"""Rate-distortion goodness-of-fit toolkit."""

__version__ = "1.0.0"
