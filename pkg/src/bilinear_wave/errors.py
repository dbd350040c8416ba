"""Exception types raised by the solvers and the scenario layer."""


class ShapeError(ValueError):
    """Field shape does not match the grid it is used with."""


class SolverError(RuntimeError):
    """Base class for failures inside a time-stepping solve."""


class InstabilityDetected(SolverError):
    """A time slice grew beyond the blow-up threshold."""


class SingularStep(SolverError):
    """The per-step linear system could not be solved."""


class LineSearchStalled(RuntimeError):
    """Armijo backtracking shrank the step below the floor without acceptance."""


class DegenerateCone(RuntimeError):
    """No nonzero critical direction could be sampled."""


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario document."""
