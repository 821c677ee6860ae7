"""Exceptions raised by the quasi-mean library.

Every exception carries a machine-readable ``code`` and the process
``exit_code`` the command line reports for it: 2 for validation
problems with the inputs, 3 for numerical failures.
"""


class QuasiMeanError(Exception):
    """Base class for all quasi-mean errors."""
    code = 'error'
    exit_code = 1


class ValidationError(QuasiMeanError, ValueError):
    """Inputs violate a documented precondition."""
    code = 'validation'
    exit_code = 2


class DomainViolationError(ValidationError):
    code = 'domain_violation'


class WeightsError(ValidationError):
    code = 'invalid_weights'


class GeneratorError(ValidationError):
    """Generator is not C2 with a nowhere-vanishing, sign-constant first derivative."""
    code = 'invalid_generator'


class FamilyError(ValidationError):
    code = 'invalid_family'


class TargetOutOfRangeError(ValidationError):
    code = 'target_out_of_range'


class ConstantSampleError(ValidationError):
    code = 'constant_sample'


class DataFileError(ValidationError):
    code = 'invalid_data'

    def __init__(self, message: str, row: int = None):
        if row is not None:
            message = f'{message} (data row {row})'
        super().__init__(message)
        self.row = row


class NumericalError(QuasiMeanError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy value."""
    code = 'numerical_failure'
    exit_code = 3


class InversionError(NumericalError):
    code = 'inversion_failed'


class FlatGeneratorError(NumericalError):
    code = 'flat_generator'


class QuadratureError(NumericalError):
    code = 'quadrature_not_converged'

    def __init__(self, message: str, partial_value: float = None):
        super().__init__(message)
        self.partial_value = partial_value


class BracketExhaustedError(NumericalError):
    code = 'bracket_exhausted'


class UnreliableEstimateError(NumericalError):
    code = 'unreliable_estimate'


class NonMonotoneError(NumericalError):
    code = 'not_monotone'
