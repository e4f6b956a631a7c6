"""Exception types raised across the package.

Every error carries a ``path`` locating the offending field or entity, so
callers (and the CLI) can report it without parsing the message.
"""

from __future__ import annotations


class MentalNavError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, path: str = "") -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.message = message
        self.path = path


class SchemaError(MentalNavError, ValueError):
    """Input document is missing a field, has a wrongly typed one, or has extras."""


class GeometryError(MentalNavError, ValueError):
    """Inverted box, duplicate id, or an object outside the grid extent."""


class GridError(MentalNavError, ValueError):
    """Occupancy grid is malformed or has no navigable cell."""


class EmptySelection(MentalNavError):
    """No object survived background exclusion."""


class ZeroVector(MentalNavError, ValueError):
    """A bearing was requested for a zero displacement."""


class DegenerateGeometry(MentalNavError):
    """All pairwise landmark distances are zero."""


class SingularDegree(MentalNavError):
    """A landmark has zero total affinity."""


class NoPath(MentalNavError):
    """The two cells are in different connected components."""


class BlockedEndpoint(MentalNavError):
    """A path endpoint is not a navigable cell."""


class SnapFailure(MentalNavError):
    """No navigable cell within the snap radius."""


class ExhaustedSampling(MentalNavError):
    """Task sampling gave up after the retry budget."""


class OutOfRange(MentalNavError, ValueError):
    """A value lies outside the supported domain."""


class EmptySpans(MentalNavError, ValueError):
    """A token record has no critical tokens."""


class UnknownLandmark(MentalNavError):
    """A plan step references a landmark absent from the map."""


class AmbiguousSemantic(MentalNavError):
    """A plan step's semantic label matches several landmarks."""


class EmptyDecodedChain(MentalNavError):
    """No step of a plan chain could be decoded."""


class ConfigError(MentalNavError, ValueError):
    """Run configuration is invalid."""
