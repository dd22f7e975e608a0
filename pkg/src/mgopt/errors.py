"""Exception hierarchy.

Input problems derive from :class:`ValidationError`; numerical breakdowns
derive from :class:`ComputeError`.  The CLI maps the two families to
distinct exit codes.
"""

from __future__ import annotations


class MgoptError(Exception):
    """Base class for all package errors."""


class ValidationError(MgoptError, ValueError):
    """Invalid input data (graph, points, measures, parameters)."""


class ComputeError(MgoptError, ArithmeticError):
    """A numerical routine failed on otherwise valid input."""


class ParseError(ValidationError):
    """A graph or measure document could not be parsed."""


# graph construction / points
class DisconnectedGraph(ValidationError):
    pass


class NonpositiveLength(ValidationError):
    pass


class DanglingEndpoint(ValidationError):
    pass


class DuplicateId(ValidationError):
    pass


class PointOffModel(ValidationError):
    pass


# linear algebra
class AsymmetricMatrix(ValidationError):
    pass


class NotPositiveDefinite(ComputeError):
    pass


class ConvergenceFailure(ComputeError):
    pass


class SingularInteriorBlock(ComputeError):
    pass


# harmonic functions
class EmptyBoundary(ValidationError):
    pass


class NoParallelEdges(ValidationError):
    pass


# resistance / spectra
class CoincidentPoints(ValidationError):
    pass


class MeasureMeetsDirichlet(ValidationError):
    pass


class EmptyMeasure(ValidationError):
    pass


class EmptyDirichletSet(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class IdenticallyZeroSegment(ComputeError):
    pass


class NegativeDensity(ValidationError):
    pass


class NotAPath(ValidationError):
    pass
