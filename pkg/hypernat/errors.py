"""Exception types raised by the HyperNAT engine and tools.

Each error also derives from the builtin it most resembles, so callers that
only know about ``ValueError`` or ``LookupError`` keep working.
"""

from typing import Optional


class HyperNATError(Exception):
    """Base class for every error raised by this package."""


class EmptySpace(HyperNATError, ValueError):
    """External space has fewer endpoints than NICs to split it across."""


class SubspaceExhausted(HyperNATError, RuntimeError):
    """A NIC's external subspace has no free endpoint left."""


class NotAllocated(HyperNATError, KeyError):
    """Release of an endpoint that is not currently allocated."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class NotInExternalSpace(HyperNATError, LookupError):
    """Endpoint lies outside the external address space."""


class KeyMismatch(HyperNATError, ValueError):
    """Packet does not match the rule it is being translated with."""


class ParseError(HyperNATError, ValueError):
    """Malformed input file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(HyperNATError, ValueError):
    """Well-formed input that violates a semantic rule."""

    def __init__(self, message: str, rule: str = ""):
        self.rule = rule
        super().__init__(f"{rule}: {message}" if rule else message)


class ConfigError(HyperNATError, ValueError):
    """Inconsistent or invalid configuration."""


class SpaceTooSmall(HyperNATError, ValueError):
    """Requested more distinct flows than the address spaces can hold."""


class EmptyInput(HyperNATError, ValueError):
    """Aggregation was asked to summarize nothing."""
