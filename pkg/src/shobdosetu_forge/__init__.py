"""Data tooling for long-form Bengali speech recognition and diarization."""

__version__ = "0.1.0"
