"""Exception hierarchy shared by the toolkit."""


class RelaxometerError(Exception):
    """Base class for all toolkit errors."""


class InvalidDimensionError(RelaxometerError, ValueError):
    pass


class ConfigurationError(RelaxometerError, ValueError):
    pass


class PartitionError(RelaxometerError, ValueError):
    pass


class NumericalConsistencyError(RelaxometerError, ArithmeticError):
    """A quantity that must be real, unitary, etc. failed its tolerance check."""


class NotASymmetryError(RelaxometerError, ValueError):
    pass


class ResourceError(RelaxometerError, MemoryError):
    pass


class DomainError(RelaxometerError, ValueError):
    pass
