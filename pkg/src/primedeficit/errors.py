"""Exception hierarchy shared by every module."""


class PrimeDeficitError(Exception):
    """Base class for all package errors."""


class DomainError(PrimeDeficitError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapacityError(PrimeDeficitError):
    """A request needs primes beyond the configured sieve capacity."""


class AccumulatorOverflowError(PrimeDeficitError, OverflowError):
    """A fixed-width accumulator would overflow."""


class CheckpointError(PrimeDeficitError):
    """A checkpoint file is corrupt, truncated or from an unknown version."""


class PrecisionError(PrimeDeficitError):
    """A requested numerical tolerance could not be reached."""
