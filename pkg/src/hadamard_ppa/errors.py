"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point is not a member of the space, or lies outside D(f)."""


class ArgumentError(ValueError):
    pass


class ConfigurationError(ValueError):
    """Malformed space, objective or experiment config.

    ``errors`` holds every problem found, not just the first.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class StepSizeError(ValueError):
    """A proximal parameter violates lambda < 1/(2 alpha)."""


class CapabilityError(Exception):
    """The requested check or solver is unsupported for these inputs."""


class PreconditionError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of budget.

    ``best`` carries the best iterate found; ``trajectory`` is attached by the
    PPA driver when the failure happens mid-run.
    """

    def __init__(self, message, best=None, trajectory=None):
        super().__init__(message)
        self.best = best
        self.trajectory = trajectory
