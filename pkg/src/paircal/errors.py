"""Exception hierarchy. CLI exit codes key off the two base classes."""


class PaircalError(Exception):
    """Base class for all package errors."""


class InputError(PaircalError, ValueError):
    """Bad user input: malformed config, wrong dimensions, bad CSV."""


class ParseError(InputError):
    pass


class SchemaError(InputError):
    pass


class ReportError(InputError):
    pass


class RuntimeFailure(PaircalError, RuntimeError):
    """Failure while a simulation is running."""


class MatchFailure(RuntimeFailure):
    pass


class PoolExhausted(RuntimeFailure):
    pass


class SequencingError(RuntimeFailure):
    pass


class NumericalError(RuntimeFailure):
    pass


class AlgorithmFailure(RuntimeFailure):
    pass
