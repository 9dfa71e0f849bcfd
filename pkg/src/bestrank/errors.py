"""Exception hierarchy shared by the library and the command line."""


class BestRankError(Exception):
    """Base class for every error raised by this package."""


class InputError(BestRankError, ValueError):
    """Invalid arguments: bad shapes, out-of-range ranks, non-finite data."""


class InfeasibleError(InputError):
    """A requested sampling budget cannot be met."""


class ConsistencyError(InputError):
    """Inputs disagree with each other (e.g. a mask entry with zero probability)."""


class FormatError(InputError):
    """A file on disk does not follow the expected format."""


class DegeneracyError(InputError):
    """The rank-r eigengap is zero, so the requested quantity is undefined."""


class DivergenceError(BestRankError, ArithmeticError):
    """The optimizer produced a non-finite objective."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite objective at iteration {iteration}")
