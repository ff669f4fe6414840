"""Exception types shared across the package."""


class StructuralError(ValueError):
    """A graph violates a structural invariant (cycle, bad context node, ...)."""


class NoDataError(ValueError):
    """An estimator was queried on an empty conditioning set."""


class IncompleteSupportError(NoDataError):
    """Some value of a separating set in the effective domain has never been observed."""


class CapacityError(RuntimeError):
    """Exact enumeration would exceed the configured state-space cap."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
