"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class BeliefError(Exception):
    """Base class for every error raised by this package."""


class TensorError(BeliefError, ValueError):
    pass


class AxisMismatchError(TensorError):
    """Operands of an elementwise operation do not cover the same axes."""


class SharedAxisError(TensorError):
    """Operands of an outer product share a variable."""


class ZeroMassError(TensorError):
    """A tensor that must be normalized has no positive element."""


class ModelError(BeliefError, ValueError):
    pass


class ParseError(ModelError):
    pass


class SchemaError(ModelError):
    pass


class NetworkValidationError(ModelError):
    def __init__(self, variable: str | None, kind: str, message: str):
        super().__init__(f"{variable}: {message}" if variable else message)
        self.variable = variable
        self.kind = kind


class EvidenceError(BeliefError, ValueError):
    pass


class ContradictoryEvidenceError(ZeroMassError):
    """Evidence has zero probability under the network."""

    def __init__(self, node: str, message: str | None = None):
        super().__init__(message or f"contradictory evidence: zero mass at node {node!r}")
        self.node = node


class OracleCapError(BeliefError, ValueError):
    """Joint table would exceed the enumeration cap."""
