"""Exceptions shared across forient.

The command line maps them onto exit codes, see `forient.cli`.
"""


class ForientError(Exception):
    """Base class of all forient errors"""

    pass


class CapExceededError(ForientError, ValueError):
    """Raised when an instance is larger than a desk-scale cap allows."""

    def __init__(self, cap: str, size: int, limit: int, what: str = "") -> None:
        self.cap = cap
        self.size = size
        self.limit = limit
        what = f" ({what})" if what else ""
        super().__init__(
            f"cap '{cap}' exceeded{what}: size {size} is larger than the limit {limit}"
        )


class InfeasibleError(ForientError):
    """Raised when an instance or a linear program has no feasible solution.

    The optional witness is a violated partition/co-partition row or a
    Farkas certificate, depending on where infeasibility was detected.
    """

    def __init__(self, message: str, witness=None) -> None:
        self.witness = witness
        super().__init__(message)


class ContractError(ForientError):
    """Raised when an internal contract of the algorithms is violated"""

    pass


class RoundingAnomaly(ContractError):
    """Raised when no remaining edge reaches the fixing threshold in a round"""

    pass


class InstanceFormatError(ForientError, ValueError):
    """Raised for malformed instance files; the message names the field path"""

    def __init__(self, field: str, message: str, line: int = None) -> None:
        self.field = field
        self.message = message
        self.line = line
        location = f"line {line}, " if line is not None else ""
        super().__init__(f"{location}field '{field}': {message}")
