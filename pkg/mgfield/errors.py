"""Exception hierarchy for mgfield.

Input problems and numerical failures are kept apart so the CLI can map them
to different exit codes.
"""


class MgfieldError(Exception):
    """Base class for all mgfield errors."""


class InputError(MgfieldError):
    """Invalid user input: graphs, points, parameters or file formats."""


class NonPositiveLength(InputError):
    pass


class Disconnected(InputError):
    pass


class BadIndex(InputError):
    pass


class BadPoint(InputError):
    pass


class BadParams(InputError):
    pass


class NonUniformLengths(InputError):
    pass


class NotAdmissible(InputError):
    """The refined graph has parallel edges or self-loops."""


class FormatError(InputError):
    """Malformed JSON or CSV input."""


class NumericalError(MgfieldError):
    """A computation failed for numerical reasons."""


class NotPositiveDefinite(NumericalError):
    """Cholesky factorization broke down.

    Attributes:
        index: Row of the first failing pivot (0-based)
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class SingularLaplacian(NumericalError):
    pass
