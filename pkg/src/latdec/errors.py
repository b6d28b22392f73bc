"""Exception types shared across the package."""


class LatdecError(Exception):
    """Base class for all package errors."""


class SingularBasisError(LatdecError):
    """Basis is rank deficient (a triangular diagonal entry vanished)."""


class DimensionTooLargeError(LatdecError):
    """Brute-force oracle invoked beyond its guaranteed-cheap dimension."""


class InvalidConfigError(LatdecError):
    """A configuration value violates its contract."""


class ResourceLimitError(LatdecError):
    """The node-count safety cap was exceeded during a tree search."""


class RadiusUndefinedError(LatdecError):
    """Pruning budget too small for the requested per-path radius."""
