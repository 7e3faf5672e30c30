"""Exception hierarchy shared by all modules."""


class AtmosimError(Exception):
    """Base class for every error raised by this package."""


class ParameterDomainError(AtmosimError, ValueError):
    """A model or configuration parameter is outside its admissible domain."""


class DomainError(AtmosimError, ValueError):
    """A function argument lies outside the function's domain."""


class NotAvailableError(AtmosimError):
    """The requested quantity has no implementation for this model family."""


class DegenerateDistributionError(AtmosimError, ValueError):
    pass


class EmptyInputError(AtmosimError, ValueError):
    pass


class EmptyPostSelectionError(AtmosimError, ValueError):
    pass


class UndefinedStatisticError(AtmosimError, ValueError):
    """Skewness of a zero-variance distribution and similar."""


class TruncationError(AtmosimError, ValueError):
    """Truncation at ``nmax`` discards more probability than allowed."""


class ContractViolationError(AtmosimError, ValueError):
    pass


class CountsRequiredError(AtmosimError, ValueError):
    """Bootstrap needs count data, not bare probabilities."""


class IncompleteEnsembleError(AtmosimError):
    """An attenuation level needed by a PDT is missing from the ensemble."""


class SchemaError(AtmosimError):
    """Inconsistent bin numbers or malformed records."""


class IngestionError(AtmosimError):
    """Problem while reading external data; message carries file/line context."""


class ConfigurationError(AtmosimError):
    pass


class UnachievableTargetError(AtmosimError, ValueError):
    pass
