"""Exception types raised across the package.

Every error is a ``TopostatError`` and a ``ValueError``, so callers that only
care about bad input can catch the builtin.
"""


class TopostatError(ValueError):
    """Base class for all package errors."""


# data
class NonSquare(TopostatError):
    pass


class AsymmetryTooLarge(TopostatError):
    pass


class OutOfRangeEntry(TopostatError):
    pass


class NonFiniteEntry(TopostatError):
    pass


class WrongKind(TopostatError):
    pass


class EmptyCloud(TopostatError):
    pass


class BadRadii(TopostatError):
    pass


# rips / persistence
class CapacityExceeded(TopostatError):
    pass


class TooLarge(TopostatError):
    pass


class NoRepresentativeStored(TopostatError):
    pass


class InfiniteIntervalUnsupported(TopostatError):
    pass


# landscape
class Unordered(TopostatError):
    pass


class NonFinite(TopostatError):
    pass


class CapTooSmall(TopostatError):
    pass


class EmptyList(TopostatError):
    pass


class DegreeMismatch(TopostatError):
    pass


class BadP(TopostatError):
    pass


class BadGrid(TopostatError):
    pass


# inference
class GroupTooSmall(TopostatError):
    pass


class TooFewSamples(TopostatError):
    pass


class ObservedNotInNull(TopostatError):
    pass


# embedding
class DisconnectedGraph(TopostatError):
    def __init__(self, n_components):
        super().__init__(f"neighborhood graph has {n_components} connected components")
        self.n_components = n_components


class NoPositiveEigenvalues(TopostatError):
    pass


class SizeMismatch(TopostatError):
    pass


# cycles
class NoFiniteInterval(TopostatError):
    pass


class NotACycle(TopostatError):
    pass


class EdgesMissing(TopostatError):
    pass


# cli / io
class MalformedInput(TopostatError):
    pass


class ConfigError(TopostatError):
    pass
