"""Exceptions raised by the solver library and mapped to CLI exit codes."""


class AdmmBenchError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ValidationError(AdmmBenchError):
    """Invalid configuration, problem instance or record."""

    exit_code = 2


class SolverError(AdmmBenchError):
    """A sub-problem oracle or factorization failed."""

    exit_code = 1


class DatasetIOError(AdmmBenchError):
    """A dataset could not be read or an output could not be written."""

    exit_code = 3
