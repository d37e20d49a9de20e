"""phonpair: driven qubit-oscillator Lindblad dynamics, the eliminated
phonon-pair model, kernel-enumeration cross-checks, and phase-space analysis.
"""

from .engine import TrajectoryRecord, backend_name
from .errors import (
    ConfigError,
    IntegrationDivergedError,
    NumericalError,
    PhonpairError,
    VerificationError,
)
from .params import SystemParams

__version__ = "0.1.0"

__all__ = [
    "SystemParams",
    "TrajectoryRecord",
    "backend_name",
    "PhonpairError",
    "ConfigError",
    "NumericalError",
    "IntegrationDivergedError",
    "VerificationError",
    "__version__",
]
