"""Cooper-pair-box circuit parameters mapped to model parameters.

The charge qubit is diagonalized by a rotation through the mixing angle
theta0 = atan2(E_J, charge_bias) with charge_bias = 4 E_C (1 - 2 n_g0).
In the eigenbasis the electromechanical coupling splits into a transverse
and a longitudinal part,

    g_z = -4 E_C lam cos(theta0),   g_x = -4 E_C lam sin(theta0),

both fed by the same capacitive pathway with the dimensionless zero-point
coupling constant

    lam = (V_g / 2e) (dC_g/dx) x_zpf,   x_zpf = sqrt(hbar / (2 m omega_m)).

The coupling formulas above are stated with hbar = 1; x_zpf restores SI
units (V_g dC_g/dx / (2e) has units 1/m, so lam is dimensionless).

Driving the gate charge at amplitude n_d produces both transverse and
longitudinal drive components; a simultaneous flux drive of amplitude
delta_EJ = 8 E_C n_d cot(theta0) cancels the longitudinal one, leaving the
purely transverse Rabi amplitude Omega = 4 E_C n_d / sin(theta0).

Signs: both couplings carry the overall minus sign of the rotation
convention. Magnitudes are what matter dynamically because the master
equation is invariant under the joint flip (g_x, g_z) -> (-g_x, -g_z)
(absorb a -> -a).

All energies here are angular frequencies (rad/s). The CLI accepts Hz and
converts; this module does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import elementary_charge, hbar

from .errors import (
    ConfigError,
    DegenerateQubitError,
    InsufficientDataError,
    MatchingImpossibleError,
)
from .params import SystemParams

SIN_THETA_FLOOR = 1e-12


@dataclass(frozen=True)
class CircuitParams:
    """Circuit-level inputs. Energies in rad/s.

    lam is the dimensionless electromechanical coupling constant; supply it
    directly or provide (V_g, dCg_dx, mass, omega_m) and let zpf_lambda
    compute it.
    """

    E_C: float
    E_J: float
    n_g0: float = 0.0
    lam: float | None = None
    n_d: float = 0.0
    V_g: float | None = None
    dCg_dx: float | None = None
    mass: float | None = None
    omega_m: float | None = None
    Gamma_phi: float = 0.0

    def __post_init__(self):
        if not (self.E_C > 0.0 and math.isfinite(self.E_C)):
            raise ConfigError(f"E_C must be positive, got {self.E_C}")
        if self.E_J < 0.0 or not math.isfinite(self.E_J):
            raise ConfigError(f"E_J must be non-negative, got {self.E_J}")
        if self.Gamma_phi < 0.0:
            raise ConfigError(f"Gamma_phi must be non-negative, got {self.Gamma_phi}")
        for name in ("lam", "V_g", "dCg_dx", "mass", "omega_m"):
            val = getattr(self, name)
            if val is not None and not (val > 0.0 and math.isfinite(val)):
                raise ConfigError(f"{name} must be positive when provided, got {val}")


def qubit_eigenbasis(c: CircuitParams) -> tuple[float, float, float]:
    """(omega_q, theta0, charge_bias) of the diagonalized charge qubit."""
    charge_bias = 4.0 * c.E_C * (1.0 - 2.0 * c.n_g0)
    if c.E_J == 0.0 and charge_bias == 0.0:
        raise DegenerateQubitError(
            "E_J = 0 at charge degeneracy: the qubit splitting vanishes and "
            "the eigenbasis angle is undefined"
        )
    theta0 = math.atan2(c.E_J, charge_bias)
    omega_q = math.hypot(c.E_J, charge_bias)
    return omega_q, theta0, charge_bias


def zpf_lambda(c: CircuitParams) -> float:
    """Dimensionless coupling lam from the zero-point motion (SI inputs)."""
    missing = [
        name
        for name in ("V_g", "dCg_dx", "mass", "omega_m")
        if getattr(c, name) is None
    ]
    if missing:
        raise InsufficientDataError(
            "computing lam needs V_g, dCg_dx, mass and omega_m; missing: "
            + ", ".join(missing)
        )
    x_zpf = math.sqrt(hbar / (2.0 * c.mass * c.omega_m))
    return (c.V_g / (2.0 * elementary_charge)) * c.dCg_dx * x_zpf


def eigenbasis_cosines(c: CircuitParams) -> tuple[float, float]:
    """(sin theta0, cos theta0) from the bias ratios, not the angle.

    Dividing (E_J, charge_bias) by omega_q keeps limiting cases exact: at
    charge degeneracy the bias is 0.0 and cos theta0 comes out identically
    zero, whereas cos(atan2(E_J, 0.0)) would leave an eps-sized remnant.
    """
    omega_q, _, charge_bias = qubit_eigenbasis(c)
    return c.E_J / omega_q, charge_bias / omega_q


def electromech_couplings(
    c: CircuitParams, theta0: float | None = None
) -> tuple[float, float]:
    """(g_x, g_z) in rad/s; signed per the rotation convention.

    With theta0 = None the qubit eigenbasis angle is used through its exact
    direction cosines; pass an explicit angle to probe other rotations.
    """
    lam = c.lam if c.lam is not None else zpf_lambda(c)
    if theta0 is None:
        s, cth = eigenbasis_cosines(c)
    else:
        s, cth = math.sin(theta0), math.cos(theta0)
    return -4.0 * c.E_C * lam * s, -4.0 * c.E_C * lam * cth


def drive_matching(c: CircuitParams, theta0: float) -> tuple[float, float, float]:
    """(delta_EJ, Omega, A_z_residual) for a gate drive of amplitude n_d.

    delta_EJ is the flux-drive amplitude that cancels the longitudinal
    component of the gate drive; the residual A_z evaluated with it must
    vanish (returned so callers can assert it).
    """
    s = math.sin(theta0)
    if abs(s) < SIN_THETA_FLOOR:
        raise MatchingImpossibleError(
            f"theta0 = {theta0:.6g}: sin(theta0) vanishes, the longitudinal "
            "drive component cannot be cancelled by any flux drive"
        )
    cot = math.cos(theta0) / s
    delta_ej = 8.0 * c.E_C * c.n_d * cot
    omega = 4.0 * c.E_C * c.n_d / s
    a_z = 4.0 * c.E_C * c.n_d * math.cos(theta0) - 0.5 * delta_ej * s
    return delta_ej, omega, a_z


def broadened_kappa_half(kappa: float, gamma_phi: float) -> float:
    """Qubit response half-width kappa/2 + Gamma_phi (pure dephasing adds
    to the coherence decay that the response functions probe)."""
    return 0.5 * kappa + gamma_phi


def circuit_for_targets(
    omega_q: float,
    g_x: float,
    g_z: float,
    Omega: float,
    E_C: float,
    Gamma_phi: float = 0.0,
) -> CircuitParams:
    """Inverse map: a circuit realizing target model parameters.

    The coupling ratio fixes theta0 and the overall scale fixes lam; E_C
    stays a free choice (one-parameter family) supplied by the caller.
    Realizable pairs have g_x < 0 (lam > 0 and sin(theta0) > 0); targets
    with g_x > 0 are realized up to the joint flip (g_x, g_z) -> (-g_x,
    -g_z), which the master equation cannot distinguish.
    """
    if g_x == 0.0:
        raise ConfigError(
            "g_x = 0 means theta0 is 0 or pi; the transverse coupling and "
            "the drive both vanish there, so no circuit realizes this target"
        )
    if omega_q <= 0.0 or E_C <= 0.0:
        raise ConfigError("omega_q and E_C must be positive targets")
    gx, gz = (g_x, g_z) if g_x < 0.0 else (-g_x, -g_z)
    scale = math.hypot(gx, gz)
    theta0 = math.atan2(-gx, -gz)
    lam = scale / (4.0 * E_C)
    e_j = omega_q * math.sin(theta0)
    charge_bias = omega_q * math.cos(theta0)
    n_g0 = 0.5 * (1.0 - charge_bias / (4.0 * E_C))
    n_d = Omega * math.sin(theta0) / (4.0 * E_C)
    return CircuitParams(
        E_C=E_C, E_J=e_j, n_g0=n_g0, lam=lam, n_d=n_d, Gamma_phi=Gamma_phi
    )


def system_params_from_circuit(
    c: CircuitParams,
    omega_m: float,
    omega_d: float,
    kappa: float,
    gamma: float = 0.0,
    n_th: float = 0.0,
    n_trunc: int = 60,
) -> SystemParams:
    """Forward map ending in a SystemParams ready for the solvers."""
    omega_q, theta0, _ = qubit_eigenbasis(c)
    g_x, g_z = electromech_couplings(c)
    _, omega, _ = drive_matching(c, theta0)
    return SystemParams(
        omega_m=omega_m,
        omega_q=omega_q,
        omega_d=omega_d,
        g_x=g_x,
        g_z=g_z,
        Omega=omega,
        kappa=kappa,
        gamma=gamma,
        gamma_phi=c.Gamma_phi,
        n_th=n_th,
        n_trunc=n_trunc,
    )
