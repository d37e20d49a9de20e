"""System parameters for the driven qubit-oscillator model.

All frequencies and rates are angular (rad/s). Configuration files speak
ordinary Hz; the conversion by 2*pi happens exactly once, at the config
boundary (`SystemParams.from_hz`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .errors import ConfigError, TruncationError

# Couplings above this fraction of omega_m put the perturbative elimination
# on thin ice; constructions still proceed but emit a warning.
COUPLING_WARN_FRACTION = 0.2


@dataclass(frozen=True)
class SystemParams:
    """Parameters of the lab-frame model

    H(t) = omega_m a^dag a + (omega_q/2) sigma_z
         + (g_x sigma_x + g_z sigma_z)(a + a^dag)
         + Omega cos(omega_d t) sigma_x

    with qubit decay kappa, qubit dephasing gamma_phi, and mechanical
    damping gamma into a bath of occupation n_th.
    """

    omega_m: float
    omega_q: float
    omega_d: float
    g_x: float
    g_z: float
    Omega: float
    kappa: float
    gamma: float = 0.0
    gamma_phi: float = 0.0
    n_th: float = 0.0
    n_trunc: int = 60

    def __post_init__(self):
        fields = {
            "omega_m": self.omega_m,
            "omega_q": self.omega_q,
            "omega_d": self.omega_d,
            "g_x": self.g_x,
            "g_z": self.g_z,
            "Omega": self.Omega,
            "kappa": self.kappa,
            "gamma": self.gamma,
            "gamma_phi": self.gamma_phi,
            "n_th": self.n_th,
        }
        for name, val in fields.items():
            if not math.isfinite(val):
                raise ConfigError(f"parameter {name} is not finite: {val!r}")
        if self.omega_m <= 0:
            raise ConfigError(f"omega_m must be > 0, got {self.omega_m}")
        if self.kappa <= 0:
            raise ConfigError(f"kappa must be > 0, got {self.kappa}")
        for name in ("gamma", "gamma_phi", "n_th"):
            if fields[name] < 0:
                raise ConfigError(f"{name} must be >= 0, got {fields[name]}")
        if not isinstance(self.n_trunc, int) or self.n_trunc < 2:
            raise TruncationError(
                f"n_trunc must be an integer >= 2, got {self.n_trunc!r}"
            )
        for name in ("g_x", "g_z"):
            if abs(fields[name]) > COUPLING_WARN_FRACTION * self.omega_m:
                warnings.warn(
                    f"{name} = {fields[name]:.3g} exceeds "
                    f"{COUPLING_WARN_FRACTION} * omega_m; the eliminated "
                    "model is outside its validity range",
                    stacklevel=2,
                )

    @classmethod
    def from_hz(cls, **kwargs_hz) -> "SystemParams":
        """Build from ordinary-frequency (Hz) values; n_th and n_trunc are
        passed through unscaled."""
        twopi = 2.0 * math.pi
        unscaled = {"n_th", "n_trunc"}
        kwargs = {
            k: (v if k in unscaled else twopi * v) for k, v in kwargs_hz.items()
        }
        return cls(**kwargs)

    @property
    def eps(self) -> float:
        """Drive strength entering the eliminated model: Omega / 2."""
        return 0.5 * self.Omega

    @property
    def g_two_phonon(self) -> float:
        """Second-order two-phonon vertex scale g = g_x g_z / omega_m."""
        return self.g_x * self.g_z / self.omega_m

    def gamma_rates(self) -> tuple[float, float]:
        """Thermal mechanical rates (gamma_down, gamma_up) =
        (gamma (n_th + 1), gamma n_th)."""
        return self.gamma * (self.n_th + 1.0), self.gamma * self.n_th

    def with_(self, **changes) -> "SystemParams":
        """Functional update preserving validation."""
        return replace(self, **changes)
