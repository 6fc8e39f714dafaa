"""Shared exception base for the covlab package.

Every domain error raised by covlab derives from :class:`CovlabError` so
callers (notably the CLI and the backtest engine) can distinguish expected
numerical/validation failures from genuine bugs.
"""


class CovlabError(Exception):
    """Base class for all covlab domain errors."""
