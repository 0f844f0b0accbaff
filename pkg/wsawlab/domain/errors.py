"""Exception hierarchy shared by every wsawlab layer.

Domain functions raise these; the CLI maps them onto exit codes.
"""

from typing import Any, Dict, Optional


class WsawError(Exception):
    """Base class for all wsawlab errors."""


class PreconditionError(WsawError, ValueError):
    """An argument violates an operation's documented contract."""


class UnsupportedParameterError(WsawError, ValueError):
    """A model parameter is outside the range an operation supports."""


class ConfigurationError(WsawError, ValueError):
    """An experiment configuration is internally inconsistent."""


class BudgetExceededError(WsawError):
    """A node or sample cap was hit before the computation finished.

    Attributes
    ----------
    budget : int
        The configured cap.
    used : int
        Work performed when the guard tripped.
    """

    def __init__(self, what: str, budget: int, used: int) -> None:
        super().__init__(f"{what} exceeded budget of {budget} (used {used})")
        self.what = what
        self.budget = budget
        self.used = used


class DegenerateSamplerError(WsawError):
    """A sampler produced no usable weight (e.g. every PERM tour was pruned)."""

    def __init__(self, message: str, statistics: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.statistics = dict(statistics or {})
