"""Exception hierarchy shared by all submodules."""


class QdvbError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QdvbError, ValueError):
    """An argument lies outside the domain of the evaluated function."""


class QuadratureError(QdvbError, ArithmeticError):
    """A numerical integral did not converge to the requested tolerance."""


class TableRangeError(QdvbError, ValueError):
    """A half-Fourier table was queried outside its tabulated range."""


class SteadyStateAmbiguityError(QdvbError, ArithmeticError):
    """The Liouvillian null space is not one-dimensional."""


class PhysicsError(QdvbError, ArithmeticError):
    """A density matrix violates positivity, trace or Hermiticity bounds."""


class WindingUndefinedError(QdvbError, ValueError):
    """The sampled ring is too dark to define a phase winding."""


class EmptyMaskError(QdvbError, ValueError):
    """Every pixel of a frame fell below the intensity floor."""


class ConfigError(QdvbError, ValueError):
    """Scenario configuration is malformed; the message names the key path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class PixelError(QdvbError):
    """A per-pixel solve failed; carries the (row, column) of the pixel."""

    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"pixel {index}: {type(cause).__name__}: {cause}")


class StageError(QdvbError):
    """A pipeline stage failed; ``stage`` names it and ``cause`` is the original error."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
