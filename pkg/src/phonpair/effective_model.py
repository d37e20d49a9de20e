"""Resonator-only effective model obtained by eliminating the fast qubit.

Every coefficient comes from the qubit response function
S(Delta) = 1/(kappa/2 + i Delta) (the half-width is kappa/2 + Gamma_phi when
pure dephasing is present) evaluated at the single- and two-phonon
detunings:

    Delta_+-  = omega_q +- omega_m        S_+-  = S(Delta_+-)
    Delta2_+- = omega_q +- 2 omega_m      S2_+- = S(Delta2_+-)

    Gamma1_+- = 2 g_x^2 Re S_+-           single-phonon induced rates
    Gamma2_+- = 2 g^2   Re S2_+-          phonon-pair induced rates
    delta1    = g_x^2 (Im S_- + Im S_+)   single-phonon frequency shift
    delta2    = g^2 (-Im S2_- + 3 Im S2_+)  pair-process frequency shift
    delta_k   = g^2 (Im S2_- + Im S2_+)   induced Kerr nonlinearity
    chi       = -i eps g / (kappa/2 + Gamma_phi - i Delta_d),
                Delta_d = omega_q - omega_d, eps = Omega/2

with g = g_x g_z / omega_m. The equation of motion, written in the
interaction frame rotating at the bare omega_m, is

    drho/dt = -i[H_eff, rho] + (Gamma1_- + gamma_-) D[a]
              + (Gamma1_+ + gamma_+) D[a^dag]
              + Gamma2_- D[a^2] + Gamma2_+ D[a^dag^2]

    H_eff = (delta1 + delta2) a^dag a + chi a^2 + chi^* a^dag^2
            + delta_k (a^dag a)^2

where the residual a^dag a term carries the induced frequency shift. With
include_frame_term off, that coefficient is dropped (equivalent to working
in the frame rotating at omega_m_eff = omega_m + delta1 + delta2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import engine
from .engine import PackedGenerator, TrajectoryRecord
from .circuit import broadened_kappa_half
from .errors import (
    ConfigError,
    DegenerateSteadyStateError,
    SteadyStateError,
    VerificationError,
)
from .operators import create, destroy, kron, number, identity
from .params import SystemParams

# dt accuracy rule for the (time-independent) effective generator
RATE_STEP_FRACTION = 0.02


@dataclass(frozen=True)
class EffectiveParams:
    """All derived coefficients of the eliminated model (rad/s and seconds).

    chi is complex; at drive resonance (Delta_d = 0) it is negative
    imaginary with |chi| = 2 eps g / kappa.
    """

    S_minus: complex
    S_plus: complex
    S2_minus: complex
    S2_plus: complex
    Delta_minus: float
    Delta_plus: float
    Delta2_minus: float
    Delta2_plus: float
    Delta_d: float
    g: float
    eps: float
    Gamma1_minus: float
    Gamma1_plus: float
    Gamma2_minus: float
    Gamma2_plus: float
    delta1: float
    delta2: float
    delta_k: float
    chi: complex
    omega_m_eff: float

    def __post_init__(self):
        for name in ("Gamma1_minus", "Gamma1_plus", "Gamma2_minus", "Gamma2_plus"):
            if getattr(self, name) < 0:
                raise VerificationError(
                    f"{name} came out negative; response functions are "
                    "malformed"
                )

    def rows(self) -> list[tuple[str, complex, str]]:
        """(symbol, value in rad/s or seconds, role) rows for reporting."""
        return [
            ("S_minus", self.S_minus, "response at Delta_minus (s)"),
            ("S_plus", self.S_plus, "response at Delta_plus (s)"),
            ("S2_minus", self.S2_minus, "response at Delta2_minus (s)"),
            ("S2_plus", self.S2_plus, "response at Delta2_plus (s)"),
            ("g", self.g, "two-phonon vertex g_x g_z / omega_m"),
            ("eps", self.eps, "drive strength Omega/2"),
            ("Gamma1_minus", self.Gamma1_minus, "induced single-phonon cooling"),
            ("Gamma1_plus", self.Gamma1_plus, "induced single-phonon heating"),
            ("Gamma2_minus", self.Gamma2_minus, "induced pair cooling"),
            ("Gamma2_plus", self.Gamma2_plus, "induced pair heating"),
            ("delta1", self.delta1, "single-phonon frequency shift"),
            ("delta2", self.delta2, "pair-process frequency shift"),
            ("delta_k", self.delta_k, "induced Kerr coefficient"),
            ("chi", self.chi, "coherent pair-drive amplitude"),
            ("omega_m_eff", self.omega_m_eff, "shifted mechanical frequency"),
        ]


def response_functions(
    params: SystemParams,
) -> tuple[complex, complex, complex, complex]:
    """(S_minus, S_plus, S2_minus, S2_plus); half-width broadened by
    dephasing."""
    kh = broadened_kappa_half(params.kappa, params.gamma_phi)
    wq, wm = params.omega_q, params.omega_m
    return (
        1.0 / (kh + 1j * (wq - wm)),
        1.0 / (kh + 1j * (wq + wm)),
        1.0 / (kh + 1j * (wq - 2.0 * wm)),
        1.0 / (kh + 1j * (wq + 2.0 * wm)),
    )


def effective_params(params: SystemParams) -> EffectiveParams:
    """Evaluate every closed-form coefficient of the eliminated model."""
    s_m, s_p, s2_m, s2_p = response_functions(params)
    kh = broadened_kappa_half(params.kappa, params.gamma_phi)
    g = params.g_two_phonon
    eps = params.eps
    gx2 = params.g_x * params.g_x
    g2 = g * g
    delta1 = gx2 * (s_m.imag + s_p.imag)
    delta2 = g2 * (-s2_m.imag + 3.0 * s2_p.imag)
    delta_d = params.omega_q - params.omega_d
    return EffectiveParams(
        S_minus=s_m,
        S_plus=s_p,
        S2_minus=s2_m,
        S2_plus=s2_p,
        Delta_minus=params.omega_q - params.omega_m,
        Delta_plus=params.omega_q + params.omega_m,
        Delta2_minus=params.omega_q - 2.0 * params.omega_m,
        Delta2_plus=params.omega_q + 2.0 * params.omega_m,
        Delta_d=delta_d,
        g=g,
        eps=eps,
        Gamma1_minus=2.0 * gx2 * s_m.real,
        Gamma1_plus=2.0 * gx2 * s_p.real,
        Gamma2_minus=2.0 * g2 * s2_m.real,
        Gamma2_plus=2.0 * g2 * s2_p.real,
        delta1=delta1,
        delta2=delta2,
        delta_k=g2 * (s2_m.imag + s2_p.imag),
        chi=-1j * eps * g / (kh - 1j * delta_d),
        omega_m_eff=params.omega_m + delta1 + delta2,
    )


# ------------------------------------------------------------------------
# generator assembly
# ------------------------------------------------------------------------


def effective_hamiltonian(
    eff: EffectiveParams, n_trunc: int, include_frame_term: bool = True
) -> np.ndarray:
    """Dense H_eff on the mechanical truncation."""
    a = destroy(n_trunc)
    ad = a.conj().T
    n_op = ad @ a
    h = eff.chi * (a @ a) + np.conj(eff.chi) * (ad @ ad) + eff.delta_k * (n_op @ n_op)
    if include_frame_term:
        h = h + (eff.delta1 + eff.delta2) * n_op
    return h


def effective_dissipators(
    eff: EffectiveParams, params: SystemParams
) -> list[tuple[float, np.ndarray]]:
    a = destroy(params.n_trunc)
    ad = a.conj().T
    g_down, g_up = params.gamma_rates()
    return [
        (eff.Gamma1_minus + g_down, a),
        (eff.Gamma1_plus + g_up, ad),
        (eff.Gamma2_minus, a @ a),
        (eff.Gamma2_plus, ad @ ad),
    ]


def build_generator(
    eff: EffectiveParams, params: SystemParams, include_frame_term: bool = True
) -> PackedGenerator:
    h = effective_hamiltonian(eff, params.n_trunc, include_frame_term)
    return PackedGenerator.build(h, [], effective_dissipators(eff, params))


def build_effective_liouvillian(
    eff: EffectiveParams, params: SystemParams, include_frame_term: bool = True
) -> np.ndarray:
    """Dense N^2 x N^2 superoperator matrix acting on column-major
    (Fortran-order) vectorized states: vec(rho) stacks the columns of rho,
    and vec(A rho B) = kron(B.T, A) vec(rho)."""
    n = params.n_trunc
    h = effective_hamiltonian(eff, params.n_trunc, include_frame_term)
    eye = identity(n)
    lv = -1j * (kron(eye, h) - kron(h.T, eye))
    for rate, l_op in effective_dissipators(eff, params):
        if rate == 0.0:
            continue
        ldl = l_op.conj().T @ l_op
        lv += rate * (
            kron(l_op.conj(), l_op)
            - 0.5 * kron(eye, ldl)
            - 0.5 * kron(ldl.T, eye)
        )
    return lv


def liouvillian_frobenius_norm(
    h: np.ndarray, jumps: list[tuple[float, np.ndarray]]
) -> float:
    """||L||_F of the Lindblad superoperator without materializing it.

    Each superoperator piece is kron(A_k, B_k); Frobenius inner products
    factorize as <kron(A,B), kron(C,D)> = <A,C> <B,D> with
    <X,Y> = Tr(X^dag Y), so the norm reduces to sums over d x d traces.
    """
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    pieces: list[tuple[np.ndarray, np.ndarray]] = [
        (eye, -1j * h),
        (1j * h.T, eye),
    ]
    for rate, l_op in jumps:
        if rate == 0.0:
            continue
        ldl = l_op.conj().T @ l_op
        pieces.append((rate * l_op.conj(), l_op))
        pieces.append((eye, -0.5 * rate * ldl))
        pieces.append((-0.5 * rate * ldl.T, eye))
    total = 0.0 + 0.0j
    for a1, b1 in pieces:
        for a2, b2 in pieces:
            total += np.vdot(a1, a2) * np.vdot(b1, b2)
    return math.sqrt(max(total.real, 0.0))


def auto_dt(eff: EffectiveParams, params: SystemParams) -> float:
    """Step bound for the time-independent effective generator: the rate
    rule below plus the packed generator's RK4 stability cap (which binds at
    large truncations, where Gamma2 N^2 exceeds every bare rate)."""
    g_down, _ = params.gamma_rates()
    n2 = float(params.n_trunc) ** 2
    scale = max(
        abs(eff.chi),
        eff.Gamma2_minus,
        eff.Gamma2_plus,
        eff.Gamma1_minus,
        eff.Gamma1_plus,
        g_down,
        abs(eff.delta_k) * n2,
        abs(eff.delta1 + eff.delta2),
    )
    dt = RATE_STEP_FRACTION / scale if scale > 0.0 else math.inf
    dt = min(dt, build_generator(eff, params).stability_dt())
    if not math.isfinite(dt):
        raise ConfigError("cannot choose a step size for a trivial generator")
    return dt


def propagate_effective(
    eff: EffectiveParams,
    params: SystemParams,
    rho0_m: np.ndarray,
    t_final: float,
    dt: float | None = None,
    record_every: int = 200,
    record_interval: float | None = None,
    include_frame_term: bool = True,
    snapshot_times: tuple[float, ...] = (),
    check: bool = True,
    extra_record=None,
) -> TrajectoryRecord:
    """Propagate the mechanical state under the effective generator."""
    gen = build_generator(eff, params, include_frame_term)
    if dt is None:
        dt = auto_dt(eff, params)
    dt, steps_per_record, n_records = engine.plan_records(
        t_final, dt, record_every, record_interval
    )
    ns = np.arange(params.n_trunc, dtype=float)
    p_diag = (-1.0) ** ns

    def observe(t: float, rho: np.ndarray) -> dict[str, float]:
        diag = np.real(np.diagonal(rho))
        out = {
            "mean_phonon": float(diag @ ns),
            "parity": float(diag @ p_diag),
            "purity": float(np.real(np.vdot(rho, rho))),
        }
        if extra_record is not None:
            out.update(extra_record(t, rho))
        return out

    interval = t_final / n_records
    snap_idx = {min(n_records, max(0, round(ts / interval))) for ts in snapshot_times}
    times, obs, snaps, _ = engine.propagate_generator(
        gen,
        rho0_m,
        dt,
        steps_per_record,
        n_records,
        on_record=observe,
        snapshot_records=snap_idx,
        check=check,
    )
    return TrajectoryRecord(
        times=times,
        observables=obs,
        snapshots=snaps,
        kappa=params.kappa,
        gamma2=eff.Gamma2_minus,
        dt=dt,
        frame="effective",
        backend=engine.backend_name(),
    )


# ------------------------------------------------------------------------
# steady state
# ------------------------------------------------------------------------


def steady_state(
    eff: EffectiveParams,
    params: SystemParams,
    rho0: np.ndarray | None = None,
    method: str = "propagate",
    include_frame_term: bool = True,
    tol_rel: float = 1e-10,
    plateau_ceiling: float = 1e-6,
    max_dimensionless_time: float = 400.0,
) -> tuple[np.ndarray, dict]:
    """Stationary state of the effective generator.

    Default method is long-time propagation from a caller-supplied initial
    state (which selects the parity sector when the generator preserves
    parity); the residual ||L(rho)||_F / ||L||_F is tracked and the loop
    ends at tol_rel. When slow single-phonon channels make the strict target
    unreachable in reasonable time, a detected residual plateau below
    plateau_ceiling is returned with a warning instead (info carries the
    achieved residual either way).

    method='nullspace' extracts the kernel of the dense vectorized
    Liouvillian instead; two near-zero eigenvalues without an initial state
    to pick a sector raise DegenerateSteadyStateError.
    """
    if method not in ("propagate", "nullspace"):
        raise ConfigError(f"unknown steady-state method {method!r}")

    h = effective_hamiltonian(eff, params.n_trunc, include_frame_term)
    jumps = effective_dissipators(eff, params)
    l_norm = liouvillian_frobenius_norm(h, jumps)
    if l_norm == 0.0:
        raise SteadyStateError("the generator vanishes; steady state undefined")

    if method == "nullspace":
        lv = build_effective_liouvillian(eff, params, include_frame_term)
        w, v = np.linalg.eig(lv)
        order = np.argsort(np.abs(w))
        thresh = 1e-10 * max(float(np.abs(w).max()), 1e-300)
        n_null = int(np.sum(np.abs(w) < thresh))
        if n_null >= 2 and rho0 is None:
            raise DegenerateSteadyStateError(
                f"{n_null} near-zero Liouvillian eigenvalues: the stationary "
                "manifold is degenerate (parity sectors); supply an initial "
                "state to select one"
            )
        if n_null >= 2:
            method = "propagate"  # sector selection needs the dynamics
        else:
            vec = v[:, order[0]]
            n = params.n_trunc
            rho = vec.reshape((n, n), order="F")
            rho = 0.5 * (rho + rho.conj().T)
            tr = float(np.trace(rho).real)
            if abs(tr) < 1e-12:
                raise DegenerateSteadyStateError(
                    "null vector is traceless; supply an initial state to "
                    "select a stationary sector"
                )
            rho = rho / tr
            gen = build_generator(eff, params, include_frame_term)
            resid = float(np.linalg.norm(gen.rhs(0.0, rho))) / l_norm
            return rho, {
                "method": "nullspace",
                "residual_rel": resid,
                "eigenvalue": complex(w[order[0]]),
                "l_norm": l_norm,
                "converged": resid < tol_rel,
            }

    if rho0 is None:
        raise ConfigError(
            "steady_state(method='propagate') needs an initial state; it "
            "selects the stationary sector when parity is conserved"
        )
    gen = build_generator(eff, params, include_frame_term)
    g_down, _ = params.gamma_rates()
    rate_scale = max(
        eff.Gamma2_minus,
        eff.Gamma2_plus,
        eff.Gamma1_minus + g_down,
        eff.Gamma1_plus,
        abs(eff.chi),
    )
    if rate_scale <= 0.0:
        raise SteadyStateError(
            "no dissipative rate is positive; propagation cannot reach a "
            "steady state"
        )
    dt = auto_dt(eff, params)
    block_t = 0.5 / rate_scale
    steps = max(1, math.ceil(block_t / dt))
    dt_block = block_t / steps
    t_max = max_dimensionless_time / rate_scale

    rho = np.array(rho0, dtype=complex, order="C")
    t = 0.0
    history: list[float] = []
    resid = float(np.linalg.norm(gen.rhs(0.0, rho))) / l_norm
    while True:
        if resid < tol_rel:
            return rho, {
                "method": "propagate",
                "residual_rel": resid,
                "l_norm": l_norm,
                "t_elapsed": t,
                "converged": True,
                "plateau": False,
            }
        history.append(resid)
        plateau = (
            len(history) >= 6
            and history[-6] > 0.0
            and (history[-6] - resid) < 0.01 * history[-6]
        )
        if (plateau or t >= t_max) and resid < plateau_ceiling:
            warnings.warn(
                f"steady-state residual plateaued at {resid:.3e} relative "
                f"(target {tol_rel:.1e}); slow single-phonon channels keep "
                "the generator from reaching the strict target",
                stacklevel=2,
            )
            return rho, {
                "method": "propagate",
                "residual_rel": resid,
                "l_norm": l_norm,
                "t_elapsed": t,
                "converged": False,
                "plateau": True,
            }
        if t >= t_max:
            raise SteadyStateError(
                f"steady-state residual {resid:.3e} still above the ceiling "
                f"{plateau_ceiling:.1e} after dimensionless time "
                f"{max_dimensionless_time}"
            )
        t = gen.step_block(rho, t, dt_block, steps)
        resid = float(np.linalg.norm(gen.rhs(0.0, rho))) / l_norm
