"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class SpiError(Exception):
    """Base class for all package errors."""

    exit_code = 4


class ConfigError(SpiError, ValueError):
    exit_code = 2


class NumericalError(SpiError, ArithmeticError):
    exit_code = 4


class IoFailure(SpiError, OSError):
    exit_code = 3


# -- mls ---------------------------------------------------------------------
class ZeroSeed(ConfigError):
    pass


class UnsupportedDegree(ConfigError):
    pass


class NonPrimitive(ConfigError):
    pass


class IndexOutOfRange(ConfigError, IndexError):
    pass


class BadFactorization(ConfigError):
    pass


# -- forward / recon ---------------------------------------------------------
class ShapeMismatch(ConfigError):
    pass


class NonFiniteInput(ConfigError):
    pass


class TooFewSamples(ConfigError):
    pass


class LengthMismatch(ConfigError):
    pass


class KernelZero(NumericalError):
    pass


class BadCrop(ConfigError):
    pass


# -- edges -------------------------------------------------------------------
class IncompleteTrace(ConfigError):
    pass


class CutoffOutOfRange(ConfigError):
    pass


# -- color / metrics ---------------------------------------------------------
class GridMismatch(ConfigError):
    pass


class BadGamma(ConfigError):
    pass


class TooSmall(ConfigError):
    pass


# -- io ----------------------------------------------------------------------
class UnsupportedFormat(IoFailure):
    pass


class CorruptFile(IoFailure):
    pass


class ConfigInvalid(ConfigError):
    """Configuration failed validation; ``problems`` maps field -> message."""

    def __init__(self, problems):
        self.problems = dict(problems)
        detail = "; ".join(f"{k}: {v}" for k, v in self.problems.items())
        super().__init__(f"invalid configuration: {detail}")
