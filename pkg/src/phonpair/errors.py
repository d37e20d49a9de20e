"""Exception hierarchy.

Three families matter to callers: configuration problems (bad input, exit
code 1 from the CLI), numerical failures (divergence, overflow, unreachable
tolerance; exit code 2), and verification failures (a cross-check between
independent computations disagrees; exit code 3).
"""


class PhonpairError(Exception):
    """Base class for all package-specific errors."""


# ---------------------------------------------------------------- config --


class ConfigError(PhonpairError):
    """Invalid configuration file, key, value, or parameter combination."""


class ShapeError(ConfigError):
    """Operator or state dimensions are inconsistent."""


class TruncationError(ConfigError):
    """Fock truncation too small for the requested construction."""


class CapacityError(ConfigError):
    """A requested composite dimension exceeds the configured maximum."""


class InvalidDissipatorError(ConfigError):
    """A dissipator has a negative rate or a malformed jump operator."""


class InvalidStateError(ConfigError):
    """A matrix fails the density-matrix requirements beyond tolerance."""


class DegenerateQubitError(ConfigError):
    """Qubit parameters leave the eigenbasis angle undefined."""


class MatchingImpossibleError(ConfigError):
    """No flux-drive amplitude cancels the longitudinal drive at this
    working point."""


class InsufficientDataError(ConfigError):
    """Required inputs for a computation were not provided."""


# ------------------------------------------------------------- numerical --


class NumericalError(PhonpairError):
    """Base class for runtime numerical failures."""


class IntegrationDivergedError(NumericalError):
    """Propagation violated a state invariant; carries the offending time."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class NumericalOverflowError(NumericalError):
    """Non-finite values appeared during a computation."""


class QuadratureError(NumericalError):
    """A numerical integral failed its convergence check."""


class SteadyStateError(NumericalError):
    """Steady-state search did not reach the residual target."""


class DegenerateSteadyStateError(NumericalError):
    """The generator has multiple steady states and no initial state was
    given to select one."""


# ----------------------------------------------------------- verification --


class VerificationError(PhonpairError):
    """An independent cross-check disagreed beyond its tolerance."""


class AssemblyError(VerificationError):
    """Enumerated kernel terms do not reduce to the expected operator form."""
