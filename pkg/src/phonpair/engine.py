"""Time-stepping engine shared by the full and effective models.

A model is packed once into generalized-diagonal arrays (PackedGenerator) and
advanced with fixed-step RK4 by one of two interchangeable backends: the
compiled kernel ``phonpair._core`` (preferred) or the numpy implementation in
``phonpair._fallback``. Set PHONPAIR_BACKEND=fallback or =compiled to force a
choice; by default the compiled kernel is used when the extension built.

The engine also owns the propagation loop: uniform recording grid, state
invariant checks (trace, Hermiticity, positivity, finiteness) at every
recorded sample, observable callbacks, and snapshot collection.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _fallback
from .errors import (
    ConfigError,
    IntegrationDivergedError,
    InvalidDissipatorError,
    NumericalOverflowError,
    ShapeError,
)
from .operators import extract_diagonals, is_hermitian

try:
    from . import _core
except ImportError:
    _core = None

# RK4's imaginary-axis stability interval ends at |z| = 2*sqrt(2); keep a
# margin since the spectral-radius bound below is loose.
RK4_STABILITY_MARGIN = 2.0

# Default invariant tolerances: (trace deviation, relative Hermiticity
# deviation, eigenvalue floor).
CHECK_TOLS = (1e-8, 1e-9, -1e-7)


def _select_backend():
    forced = os.environ.get("PHONPAIR_BACKEND", "").strip().lower()
    if forced == "fallback":
        return _fallback, "fallback"
    if forced == "compiled":
        if _core is None:
            raise ImportError(
                "PHONPAIR_BACKEND=compiled but the phonpair._core extension "
                "is not built"
            )
        return _core, "compiled"
    if forced:
        raise ConfigError(
            f"PHONPAIR_BACKEND must be 'compiled' or 'fallback', got {forced!r}"
        )
    if _core is not None:
        return _core, "compiled"
    return _fallback, "fallback"


_BACKEND_MOD, _BACKEND_NAME = _select_backend()


def backend_name() -> str:
    """Name of the active stepping backend: 'compiled' or 'fallback'."""
    return _BACKEND_NAME


def backend_module(name: str | None = None):
    """The stepping module itself; pass a name to get a specific backend."""
    if name is None:
        return _BACKEND_MOD
    if name == "fallback":
        return _fallback
    if name == "compiled":
        if _core is None:
            raise ImportError("the phonpair._core extension is not built")
        return _core
    raise ConfigError(f"unknown backend {name!r}")


# ------------------------------------------------------------------------
# generator packing
# ------------------------------------------------------------------------


@dataclass
class PackedGenerator:
    """A Lindblad generator flattened to the arrays the kernels consume.

    The Hamiltonian-side list holds entries (offset, vector, omega) with the
    time dependence exp(i omega t); it already contains both an oscillating
    operator and its conjugate (at -omega), and the -i/2 sum(rate L^dag L)
    damping term at omega = 0. Jump channels keep their own diagonal lists.
    """

    dim: int
    h_offs: np.ndarray
    h_omegas: np.ndarray
    h_vecs: np.ndarray
    j_rates: np.ndarray
    j_starts: np.ndarray
    j_offs: np.ndarray
    j_vecs: np.ndarray
    _work: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def build(
        cls,
        static_h: np.ndarray,
        osc_terms: list[tuple[np.ndarray, float]],
        jumps: list[tuple[float, np.ndarray]],
    ) -> "PackedGenerator":
        """Pack H(t) = static_h + sum_k (exp(i w_k t) A_k + h.c.) plus jump
        channels (rate, L) into kernel arrays.

        static_h must be Hermitian; each osc term contributes A_k at +w_k and
        A_k^dag at -w_k automatically.
        """
        static_h = np.asarray(static_h, dtype=complex)
        d = static_h.shape[0]
        if static_h.shape != (d, d):
            raise ShapeError(f"static Hamiltonian must be square, got {static_h.shape}")
        if not is_hermitian(static_h, tol=1e-12):
            raise InvalidDissipatorError("static Hamiltonian part is not Hermitian")

        g_damp = np.zeros((d, d), dtype=complex)
        j_rates, j_starts, j_offs, j_vecs = [], [0], [], []
        for rate, l_op in jumps:
            if not math.isfinite(rate) or rate < 0:
                raise InvalidDissipatorError(
                    f"jump rate must be finite and >= 0, got {rate}"
                )
            l_op = np.asarray(l_op, dtype=complex)
            if l_op.shape != (d, d):
                raise ShapeError(
                    f"jump operator shape {l_op.shape} does not match dim {d}"
                )
            if rate == 0.0:
                continue
            g_damp += rate * (l_op.conj().T @ l_op)
            diags = extract_diagonals(l_op)
            if not diags:
                continue
            j_rates.append(rate)
            for k, v in diags:
                j_offs.append(k)
                j_vecs.append(v)
            j_starts.append(len(j_offs))

        h_entries = []
        for k, v in extract_diagonals(static_h - 0.5j * g_damp):
            h_entries.append((k, v, 0.0))
        for a_op, omega in osc_terms:
            a_op = np.asarray(a_op, dtype=complex)
            if a_op.shape != (d, d):
                raise ShapeError(
                    f"oscillating term shape {a_op.shape} does not match dim {d}"
                )
            if not math.isfinite(omega):
                raise ConfigError(f"oscillation frequency not finite: {omega}")
            for k, v in extract_diagonals(a_op):
                h_entries.append((k, v, float(omega)))
            for k, v in extract_diagonals(a_op.conj().T):
                h_entries.append((k, v, -float(omega)))

        n_h = len(h_entries)
        h_offs = np.array([e[0] for e in h_entries], dtype=np.int64)
        h_omegas = np.array([e[2] for e in h_entries], dtype=float)
        h_vecs = np.zeros((max(n_h, 1), d), dtype=complex)
        for m, (_, v, _) in enumerate(h_entries):
            h_vecs[m] = v
        if n_h == 0:
            h_offs = np.zeros(1, dtype=np.int64)
            h_omegas = np.zeros(1, dtype=float)

        n_jd = len(j_offs)
        return cls(
            dim=d,
            h_offs=h_offs,
            h_omegas=h_omegas,
            h_vecs=h_vecs,
            j_rates=np.array(j_rates, dtype=float),
            j_starts=np.array(j_starts, dtype=np.int64),
            j_offs=np.array(j_offs if n_jd else [0], dtype=np.int64)[: max(n_jd, 0) or 1],
            j_vecs=(
                np.array(j_vecs, dtype=complex).reshape(n_jd, d)
                if n_jd
                else np.zeros((1, d), dtype=complex)
            ),
            _work=None,
        )

    def spectral_bound(self) -> float:
        """Cheap upper bound on the generator's spectral radius, used for the
        RK4 stability step cap. Each generalized diagonal has 2-norm
        max|v|; commutators double the Hamiltonian part and each jump
        sandwich contributes rate * ||L||^2."""
        h_norm = 0.0
        for m in range(self.h_offs.shape[0]):
            h_norm += float(np.abs(self.h_vecs[m]).max(initial=0.0))
        bound = 2.0 * h_norm
        for m in range(self.j_rates.shape[0]):
            l_norm = 0.0
            for dd in range(int(self.j_starts[m]), int(self.j_starts[m + 1])):
                l_norm += float(np.abs(self.j_vecs[dd]).max(initial=0.0))
            bound += float(self.j_rates[m]) * l_norm * l_norm
        return bound

    def stability_dt(self) -> float:
        """Largest step the RK4 stability region tolerates for this
        generator, by the bound above."""
        lam = self.spectral_bound()
        if lam == 0.0:
            return math.inf
        return RK4_STABILITY_MARGIN / lam

    def max_oscillation(self) -> float:
        """Fastest explicit time dependence in the Hamiltonian (rad/s)."""
        return float(np.abs(self.h_omegas).max(initial=0.0))

    def dense_hamiltonian(self, t: float) -> np.ndarray:
        """Reassemble H(t) + the -i/2 damping term as a dense matrix (mainly
        for tests and small-system work)."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for m in range(self.h_offs.shape[0]):
            out += np.exp(1j * self.h_omegas[m] * t) * _fallback.dense_from_diag(
                int(self.h_offs[m]), self.h_vecs[m]
            )
        return out

    def dense_jumps(self) -> list[tuple[float, np.ndarray]]:
        out = []
        for m in range(self.j_rates.shape[0]):
            l_op = np.zeros((self.dim, self.dim), dtype=complex)
            for dd in range(int(self.j_starts[m]), int(self.j_starts[m + 1])):
                l_op += _fallback.dense_from_diag(int(self.j_offs[dd]), self.j_vecs[dd])
            out.append((float(self.j_rates[m]), l_op))
        return out

    def rhs(self, t: float, rho: np.ndarray) -> np.ndarray:
        """Dense right-hand side at time t (reference path, used by checks
        and steady-state residuals)."""
        h_nh = self.dense_hamiltonian(t)
        b = h_nh @ rho
        y = -1j * (b - b.conj().T)
        for rate, l_op in self.dense_jumps():
            y += rate * (l_op @ rho @ l_op.conj().T)
        return y

    def work(self) -> np.ndarray:
        if self._work is None:
            self._work = np.empty((5, self.dim, self.dim), dtype=complex)
        return self._work

    def step_block(
        self, rho: np.ndarray, t0: float, dt: float, n_steps: int
    ) -> float:
        """Advance rho in place by n_steps steps with the active backend."""
        return _BACKEND_MOD.rk4_block(
            rho,
            float(t0),
            float(dt),
            int(n_steps),
            self.h_offs,
            self.h_omegas,
            self.h_vecs,
            self.j_rates,
            self.j_starts,
            self.j_offs,
            self.j_vecs,
            self.work(),
        )


# ------------------------------------------------------------------------
# propagation loop
# ------------------------------------------------------------------------


@dataclass
class TrajectoryRecord:
    """Uniformly sampled propagation output.

    times are absolute seconds; the dimensionless companions are kappa * t
    and Gamma_2minus * t (the two clocks the analysis quotes results in).
    observables maps series name to an array aligned with times; snapshots
    holds (time, state) pairs for explicitly requested sample indices.
    """

    times: np.ndarray
    observables: dict[str, np.ndarray]
    snapshots: list[tuple[float, np.ndarray]]
    kappa: float
    gamma2: float
    dt: float
    frame: str | None
    backend: str

    @property
    def kappa_t(self) -> np.ndarray:
        return self.kappa * self.times

    @property
    def gamma2_t(self) -> np.ndarray:
        return self.gamma2 * self.times


def plan_steps(
    t_final: float, dt_max: float, record_every: int
) -> tuple[float, int, int]:
    """Choose (dt, steps_per_record, n_records) so that n_records blocks of
    steps_per_record steps of size dt land exactly on t_final with
    dt <= dt_max."""
    if not (t_final > 0.0) or not math.isfinite(t_final):
        raise ConfigError(f"final time must be positive and finite, got {t_final}")
    if not (dt_max > 0.0) or not math.isfinite(dt_max):
        raise ConfigError(f"step bound must be positive and finite, got {dt_max}")
    if record_every < 1:
        raise ConfigError(f"record_every must be >= 1, got {record_every}")
    n_total = max(1, math.ceil(t_final / dt_max - 1e-12))
    n_records = max(1, math.ceil(n_total / record_every))
    n_total = n_records * record_every
    return t_final / n_total, record_every, n_records


def plan_records(
    t_final: float,
    dt_max: float,
    record_every: int = 200,
    record_interval: float | None = None,
) -> tuple[float, int, int]:
    """Like plan_steps, but an explicit record_interval (seconds) pins the
    recording grid exactly; two models planned with the same interval then
    record at identical absolute times regardless of their step bounds."""
    if record_interval is None:
        return plan_steps(t_final, dt_max, record_every)
    if not (record_interval > 0.0) or not math.isfinite(record_interval):
        raise ConfigError(
            f"record interval must be positive and finite, got {record_interval}"
        )
    n_records = max(1, round(t_final / record_interval))
    if abs(n_records * record_interval - t_final) > 1e-9 * abs(t_final):
        raise ConfigError(
            f"final time {t_final} is not a whole number of record intervals "
            f"{record_interval}"
        )
    steps = max(1, math.ceil(record_interval / dt_max - 1e-12))
    return record_interval / steps, steps, n_records


def propagate_generator(
    gen: PackedGenerator,
    rho0: np.ndarray,
    dt: float,
    steps_per_record: int,
    n_records: int,
    t0: float = 0.0,
    on_record=None,
    snapshot_records: set[int] | None = None,
    check: bool = True,
    check_tols: tuple[float, float, float] = CHECK_TOLS,
) -> tuple[np.ndarray, dict[str, np.ndarray], list[tuple[float, np.ndarray]], np.ndarray]:
    """Run the RK4 loop, recording after every steps_per_record steps.

    on_record(t, rho) may return a dict of scalar observables collected into
    aligned arrays; record index 0 is the initial state. Returns
    (times, observables, snapshots, final_state). State invariants are
    enforced at every recorded sample when check is True; violations raise
    IntegrationDivergedError naming the offending time, and non-finite
    values raise NumericalOverflowError.
    """
    rho = np.array(rho0, dtype=complex, order="C")
    if rho.shape != (gen.dim, gen.dim):
        raise ShapeError(
            f"initial state shape {rho.shape} does not match generator "
            f"dimension {gen.dim}"
        )
    snapshot_records = snapshot_records or set()
    times = np.empty(n_records + 1, dtype=float)
    series: dict[str, list[float]] = {}
    snapshots: list[tuple[float, np.ndarray]] = []

    trace_tol, herm_tol, eig_floor = check_tols

    def inspect(idx: int, t: float) -> None:
        if check:
            if not np.all(np.isfinite(rho.view(float))):
                raise NumericalOverflowError(
                    f"non-finite state entries at t = {t:.6e} s"
                )
            tr = complex(np.trace(rho))
            tr_dev = abs(tr.real - 1.0) + abs(tr.imag)
            if tr_dev > trace_tol:
                raise IntegrationDivergedError(
                    f"trace deviates by {tr_dev:.3e} (> {trace_tol:.1e}) at "
                    f"t = {t:.6e} s; reduce dt",
                    t=t,
                )
            scale = max(float(np.abs(rho).max()), 1e-300)
            herm = float(np.abs(rho - rho.conj().T).max()) / scale
            if herm > herm_tol:
                raise IntegrationDivergedError(
                    f"Hermiticity deviates by {herm:.3e} (> {herm_tol:.1e}) "
                    f"at t = {t:.6e} s",
                    t=t,
                )
            w_min = float(np.linalg.eigvalsh(rho).min())
            if w_min < eig_floor:
                raise IntegrationDivergedError(
                    f"eigenvalue {w_min:.3e} below {eig_floor:.1e} at "
                    f"t = {t:.6e} s; reduce dt or increase n_trunc",
                    t=t,
                )
        times[idx] = t
        if on_record is not None:
            vals = on_record(t, rho)
            if vals:
                for key, val in vals.items():
                    series.setdefault(key, []).append(float(val))
        if idx in snapshot_records:
            snapshots.append((t, rho.copy()))

    t = float(t0)
    inspect(0, t)
    for r in range(1, n_records + 1):
        t = gen.step_block(rho, t, dt, steps_per_record)
        inspect(r, t)
    observables = {k: np.array(v) for k, v in series.items()}
    return times, observables, snapshots, rho
