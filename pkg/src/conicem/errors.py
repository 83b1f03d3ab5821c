"""Exception types raised across the package.

Every named failure mode is a distinct class so callers (and the CLI) can
react per condition; all inherit from :class:`ConicEMError`.
"""


class ConicEMError(Exception):
    """Base class for all package errors."""


# --- geometry -------------------------------------------------------------

class ZeroAxis(ConicEMError, ValueError):
    """Cone axis is the zero vector."""


class AngleOutOfRange(ConicEMError, ValueError):
    """Half angle outside the open interval (0, pi/2)."""


class NonpositiveRadius(ConicEMError, ValueError):
    """Radius must be strictly positive."""


class NoUniformBound(ConicEMError, ValueError):
    """No delta > 0 with d . xhat <= -delta over the spherical cap."""


class ApexInsideBase(ConicEMError, ValueError):
    """Coronal cone apex lies inside (or on) the closure of the base body."""


class OverlappingAttachment(ConicEMError, ValueError):
    """Two coronal cones share part of their attachment patch on the base."""


class DetachedCone(ConicEMError, ValueError):
    """A coronal cone's attachment trace misses the base boundary."""


# --- fields ---------------------------------------------------------------

class WavenumberMismatch(ConicEMError, ValueError):
    """CGO parameter wavenumber differs from the background wavenumber."""


class NonTransversePolarization(ConicEMError, ValueError):
    """Plane-wave polarization is not orthogonal to the propagation direction."""


class SupportMarginViolated(ConicEMError, ValueError):
    """Finite-difference stencil would leave the field's declared support."""


class PreconditionViolated(ConicEMError, ValueError):
    """A stated operation precondition does not hold."""


# --- quadrature -----------------------------------------------------------

class BudgetExceeded(ConicEMError, RuntimeError):
    """Quadrature node count exceeds the configured cap."""


# Alias used by the field constructors.
QuadratureBudgetExceeded = BudgetExceeded


class EmptyIntersection(ConicEMError, ValueError):
    """Averaging ball does not intersect the requested domain."""


# --- asymptotics / indicator ----------------------------------------------

class DirectionBoundViolated(ConicEMError, ValueError):
    """CGO direction d admits no uniform bound on the cone (eq. innerdot fails)."""


class InsufficientData(ConicEMError, ValueError):
    """Too few samples for the requested fit or extrapolation."""


class NonpositiveValue(ConicEMError, ValueError):
    """Log-log fitting requires strictly positive samples/values."""


class ExtrapolationDiverged(ConicEMError, RuntimeError):
    """tau-extrapolation sequence is not Cauchy; refusing to average."""


# --- scattering -----------------------------------------------------------

class UnboundedSupport(ConicEMError, ValueError):
    """Source support is not a bounded region."""


class NonCompactSupport(ConicEMError, ValueError):
    """Generator fields for the non-radiating construction must be compactly supported."""


class GridMismatch(ConicEMError, ValueError):
    """Far-field patterns sampled on different direction grids."""


# --- herglotz checks --------------------------------------------------------

class RateGateFailed(ConicEMError, ValueError):
    """Approximation-rate pair fails beta < (2/3) zeta, or exponent outside range."""


# --- cli --------------------------------------------------------------------

class ConfigParse(ConicEMError, ValueError):
    """Experiment configuration file is malformed or inconsistent."""


class UnknownExperiment(ConicEMError, ValueError):
    """Requested experiment name is not registered."""


class VerdictFail(ConicEMError, RuntimeError):
    """Experiment ran to completion but its verdict failed."""
