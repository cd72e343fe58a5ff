"""Exception types raised across the package.

Everything inherits from :class:`QubboError` so callers can catch the
package's failures with a single except clause; the CLI maps these to
exit codes.
"""

from __future__ import annotations


class QubboError(Exception):
    """Base class for all package-specific errors."""


class LengthMismatchError(QubboError):
    """An assignment or bit vector has the wrong length for the space."""


class CategoryOutOfRangeError(QubboError):
    """A category index is negative or >= the site's cardinality."""


class DimensionMismatchError(QubboError):
    """Array shapes are inconsistent (coefficient vector vs. bit count, etc.)."""


class FactorizationError(QubboError):
    """The posterior normal matrix could not be Cholesky-factorized."""


class DegenerateTargetError(QubboError):
    """R^2 is undefined because every observed y is identical."""


class ProblemTooLargeError(QubboError):
    """Exhaustive enumeration was requested for too many variables."""


class InvalidScheduleError(QubboError):
    """Annealing schedule parameters are unusable (bad betas or sweeps)."""


class SpaceExhaustedError(QubboError):
    """Fewer unseen feasible points remain than were requested."""


class DuplicateRowError(QubboError):
    """A bit vector is already present in the dataset."""


class MissingEntryError(QubboError):
    """A tabular objective has no value for the requested point."""


class BudgetExceededError(QubboError):
    """The objective's evaluation budget would be exceeded."""


class InvalidDensityError(QubboError):
    """A synthetic objective density is outside [0, 1]."""


class ConfigError(QubboError):
    """A run configuration is malformed; the message names the field."""


class SchemaError(QubboError):
    """A file's header or structure does not match the expected schema."""
