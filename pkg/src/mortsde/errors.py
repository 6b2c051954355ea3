"""Exception hierarchy shared across the package.

Two families matter for the CLI exit codes: ``InputError`` subclasses mean
bad data or configuration (exit 2), ``ComputationError`` subclasses mean a
numerical procedure failed (exit 1).
"""


class MortsdeError(Exception):
    """Base class for every error raised by this package."""


class InputError(MortsdeError):
    """Bad file, bad grid, or bad configuration."""


class ComputationError(MortsdeError):
    """A numerical procedure could not produce a valid result."""


# --- data ingest ---

class MissingData(InputError):
    def __init__(self, age, year):
        super().__init__(f"missing q value at age={age}, year={year}")
        self.age = age
        self.year = year


class OutOfRange(InputError):
    """A death probability outside the open interval (0, 1)."""


class GridError(InputError):
    """Age or year axis is not a contiguous integer range."""


class NotExterior(InputError):
    """Asked for an exterior rate at an age inside the modeled range."""


class EmptyValidation(InputError):
    """Period split leaves no validation years."""


# --- kernel ---

class BadBandwidth(InputError):
    """Kernel bandwidth must be strictly positive."""


class BadAge(InputError):
    """Age outside the modeled range 0..omega."""


# --- delay profile ---

class DegenerateFit(ComputationError):
    """Through-origin regression against an all-zero base vector."""


class InsufficientHistory(InputError):
    """Not enough fit years to estimate the requested delays."""


# --- simulator ---

class ShortHistory(InputError):
    """History segment does not cover delays 0..h."""


class NumericalBlowup(ComputationError):
    """NaN or infinity produced during time stepping."""


# --- equilibrium analysis ---

class NotDiagonallyDominant(ComputationError):
    """Fixed-point condition M1 * sum_j < 1 fails at some age."""


class SingularSystem(ComputationError):
    pass


class HypothesisViolated(InputError):
    """Noise intensity b >= 1; the stability analysis requires b < 1."""


class BoundUnavailable(ComputationError):
    """No admissible decay rate exists; the asymptotic bound is undefined."""


class ShortHorizon(InputError):
    """Ensemble horizon too short for the requested time average."""


# --- indicators ---

class DegenerateStd(ComputationError):
    """Standard deviation requested from a single trajectory."""


class BadLevel(InputError):
    """Confidence level outside (0, 1)."""


class DivisionGuard(ComputationError):
    """Zero denominator in a relative or standardized indicator."""

    def __init__(self, message, ages=None):
        self.ages = list(ages) if ages is not None else []
        if self.ages:
            message = f"{message} at ages {self.ages}"
        super().__init__(message)


class ConfigError(InputError):
    """Run configuration file is malformed or inconsistent."""
