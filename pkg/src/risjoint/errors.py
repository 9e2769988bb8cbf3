"""Exception types shared across the package."""


class RisJointError(Exception):
    """Base class for all package errors."""


class DimensionError(RisJointError, ValueError):
    pass


class ContractViolation(RisJointError, ValueError):
    pass


class InfeasibleError(RisJointError, ValueError):
    pass


class NumericalError(RisJointError, ArithmeticError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class SingularityError(NumericalError):
    pass


class AlignmentError(RisJointError, ValueError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class UndefinedMetricError(RisJointError, ValueError):
    pass


class ConfigError(RisJointError, ValueError):
    pass


class ExperimentAborted(RisJointError, RuntimeError):
    def __init__(self, message, method=None, snr_db=None, failures=0, trials=0):
        super().__init__(message)
        self.method = method
        self.snr_db = snr_db
        self.failures = failures
        self.trials = trials
