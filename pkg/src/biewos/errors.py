"""Exception types raised by the solver stack."""

from __future__ import annotations


class BiewosError(Exception):
    """Base class for all package errors."""


class DomainViolationError(BiewosError):
    """A point is on or outside the open solution domain."""


class ClassificationError(BiewosError):
    """A point cannot be attributed to any boundary feature."""


class SingularityError(BiewosError):
    """A kernel was evaluated at (or numerically at) coincident points."""


class GeometryError(BiewosError):
    """A point or mesh does not satisfy a geometric precondition."""


class QuadratureError(BiewosError):
    """Invalid quadrature request."""


class ReliabilityError(BiewosError):
    """Too many random walks hit the step limit."""


class ApplicabilityError(BiewosError):
    """The last-passage estimator was asked to handle data it cannot."""


class ExtrapolationError(BiewosError):
    """An interpolation query fell outside the sampled grid."""


class NearFieldError(BiewosError):
    """A representation-formula target is too close to a boundary panel."""


class ConfigError(BiewosError):
    """Invalid run configuration."""

    def __init__(self, message: str, *, section: str | None = None,
                 key: str | None = None, line: int | None = None):
        where = ""
        if section is not None:
            where = f"[{section}]"
            if key is not None:
                where += f" {key}"
            if line is not None:
                where += f" (line {line})"
            where += ": "
        super().__init__(where + message)
        self.section = section
        self.key = key
        self.line = line
