"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: feasibility failures
(:class:`Unreachable`, :class:`PlanInfeasible`) exit 1, configuration
and I/O problems (:class:`ConfigError`) exit 2.
"""


class HdrcalError(Exception):
    """Base class for all toolkit errors."""


class ExposureOutOfRange(HdrcalError):
    """Requested exposure time falls outside the sensor's supported range."""


class ZoneOutOfBounds(HdrcalError):
    """A measurement zone does not lie fully inside the image."""


class LayoutOverflow(HdrcalError):
    """Target patches do not fit in the image, or overlap each other."""


class Unreachable(HdrcalError):
    """No exposure inside the supported range satisfies the search goal."""


class PlanInfeasible(HdrcalError):
    """An exposure plan cannot be realized within the sensor's limits."""


class PlanMismatch(HdrcalError):
    """A capture stack does not match the plan it is fused against."""


class NoLinearRegion(HdrcalError):
    """No linear region could be extracted from a calibration table."""


class ConfigError(HdrcalError):
    """Malformed configuration file or inconsistent option set."""


class NonMonotoneCrfWarning(UserWarning):
    """A measured response table is not strictly monotone."""
