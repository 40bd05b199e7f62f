"""Exception hierarchy shared by all subpackages."""


class GroverDDError(Exception):
    """Base class for every error raised by groverdd."""


class SizeError(GroverDDError, ValueError):
    """Register or fragment size outside the supported range."""


class ValidationError(GroverDDError, ValueError):
    """An operator failed a unitarity or trace-preservation check."""


class OperandError(GroverDDError, ValueError):
    """Bad qubit operands (duplicates, out of range, arity mismatch)."""


class InputError(GroverDDError, ValueError):
    """Malformed user input such as a bad bitstring or pulse count."""


class LoweringError(GroverDDError, ValueError):
    """A macro gate could not be lowered to the native set."""


class ConfigurationError(GroverDDError, ValueError):
    """Missing or inconsistent configuration (durations, calibration, CLI)."""


class NumericIntegrityError(GroverDDError, ArithmeticError):
    """Simulation produced a state that violates trace/positivity bounds."""
