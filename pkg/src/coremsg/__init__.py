"""Core-message extraction and aspect sentiment time series for financial text."""

__version__ = "0.1.0"
