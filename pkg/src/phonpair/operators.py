"""Dense operator and state constructors on a truncated Fock space, a single
qubit, and their tensor product.

Conventions used everywhere in this package:

* The mechanical mode lives on Fock levels 0..n_trunc-1.
* The qubit basis order is (excited, ground), so ``pauli('z')`` is
  diag(+1, -1) and ``pauli('minus')`` maps excited to ground.
* Composite operators put the qubit factor first:
  ``kron(qubit_op, mech_op)``, giving the flat index i = q * n_trunc + n
  with q = 0 the excited block.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (
    CapacityError,
    InvalidDissipatorError,
    InvalidStateError,
    ShapeError,
    TruncationError,
)

# Composite dimensions above this are refused; guards against accidentally
# materializing a Liouvillian-sized kron product as a dense state operator.
MAX_KRON_DIM = 20_000


class DissipatorSpec(NamedTuple):
    """One Lindblad channel: a non-negative rate and its jump operator."""

    rate: float
    op: np.ndarray


# ------------------------------------------------------------------------
# single-factor operators
# ------------------------------------------------------------------------


def destroy(n_trunc: int) -> np.ndarray:
    """Annihilation operator a on n_trunc Fock levels."""
    _check_trunc(n_trunc)
    a = np.zeros((n_trunc, n_trunc), dtype=complex)
    ns = np.arange(1, n_trunc)
    a[ns - 1, ns] = np.sqrt(ns)
    return a


def create(n_trunc: int) -> np.ndarray:
    """Creation operator a^dag on n_trunc Fock levels."""
    return destroy(n_trunc).conj().T


def number(n_trunc: int) -> np.ndarray:
    """Number operator a^dag a."""
    _check_trunc(n_trunc)
    return np.diag(np.arange(n_trunc, dtype=float)).astype(complex)


def identity(dim: int) -> np.ndarray:
    if dim < 1:
        raise ShapeError(f"identity dimension must be positive, got {dim}")
    return np.eye(dim, dtype=complex)


def parity(n_trunc: int) -> np.ndarray:
    """Phonon parity operator (-1)^(a^dag a)."""
    _check_trunc(n_trunc)
    return np.diag((-1.0) ** np.arange(n_trunc)).astype(complex)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    # basis order (excited, ground): 'minus' = |g><e|, 'plus' = |e><g|
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
}


def pauli(axis: str) -> np.ndarray:
    """Qubit operator by name: 'x', 'y', 'z', 'plus', or 'minus'."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ShapeError(
            f"unknown qubit operator {axis!r}; expected one of "
            f"{sorted(_PAULI)}"
        ) from None


# ------------------------------------------------------------------------
# composition and reduction
# ------------------------------------------------------------------------


def kron(a: np.ndarray, b: np.ndarray, max_dim: int = MAX_KRON_DIM) -> np.ndarray:
    """Tensor product with a capacity guard on the composite dimension."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("kron expects 2d arrays")
    dim = a.shape[0] * b.shape[0]
    if dim > max_dim:
        raise CapacityError(
            f"composite dimension {dim} exceeds the configured maximum "
            f"{max_dim}"
        )
    return np.kron(a, b)


def embed_qubit(op2: np.ndarray, n_trunc: int) -> np.ndarray:
    """Lift a 2x2 qubit operator to the composite space."""
    op2 = np.asarray(op2, dtype=complex)
    if op2.shape != (2, 2):
        raise ShapeError(f"expected a 2x2 operator, got {op2.shape}")
    return kron(op2, identity(n_trunc))


def embed_mech(op: np.ndarray) -> np.ndarray:
    """Lift a mechanical operator to the composite space."""
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ShapeError(f"expected a square operator, got {op.shape}")
    return kron(identity(2), op)


def partial_trace_qubit(rho: np.ndarray, n_trunc: int) -> np.ndarray:
    """Trace out the qubit, returning the n_trunc x n_trunc mechanical state."""
    rho = _check_composite(rho, n_trunc)
    r = rho.reshape(2, n_trunc, 2, n_trunc)
    return r[0, :, 0, :] + r[1, :, 1, :]


def partial_trace_mech(rho: np.ndarray, n_trunc: int) -> np.ndarray:
    """Trace out the mechanics, returning the 2x2 qubit state."""
    rho = _check_composite(rho, n_trunc)
    r = rho.reshape(2, n_trunc, 2, n_trunc)
    return np.trace(r, axis1=1, axis2=3)


def _check_composite(rho: np.ndarray, n_trunc: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    d = 2 * n_trunc
    if rho.shape != (d, d):
        raise ShapeError(
            f"expected a composite state of dimension {d} "
            f"(qubit x {n_trunc} Fock levels), got {rho.shape}"
        )
    return rho


# ------------------------------------------------------------------------
# states
# ------------------------------------------------------------------------


def fock_state(n_trunc: int, n: int) -> np.ndarray:
    """Fock state |n> as a ket vector."""
    _check_trunc(n_trunc)
    if not 0 <= n < n_trunc:
        raise TruncationError(
            f"Fock level {n} outside truncation 0..{n_trunc - 1}"
        )
    psi = np.zeros(n_trunc, dtype=complex)
    psi[n] = 1.0
    return psi


def coherent_state(
    n_trunc: int, alpha: complex, tail_tol: float = 1e-6
) -> np.ndarray:
    """Coherent state |alpha> truncated to n_trunc levels and renormalized.

    Raises TruncationError when the discarded tail weight exceeds tail_tol,
    since a silently clipped coherent state has the wrong moments.
    """
    _check_trunc(n_trunc)
    alpha = complex(alpha)
    ns = np.arange(n_trunc)
    from scipy.special import gammaln

    if alpha == 0:
        return fock_state(n_trunc, 0)
    # log-domain amplitudes: alpha^n / sqrt(n!) * exp(-|alpha|^2 / 2)
    logmag = ns * np.log(abs(alpha)) - 0.5 * gammaln(ns + 1.0) - 0.5 * abs(alpha) ** 2
    phase = np.exp(1j * ns * np.angle(alpha))
    psi = np.exp(logmag) * phase
    kept = float(np.vdot(psi, psi).real)
    if 1.0 - kept > tail_tol:
        raise TruncationError(
            f"coherent amplitude |alpha|={abs(alpha):.3g} loses weight "
            f"{1.0 - kept:.3g} beyond n_trunc={n_trunc} "
            f"(tolerance {tail_tol:.1g}); increase the truncation"
        )
    return psi / np.sqrt(kept)


def cat_state(
    n_trunc: int, alpha: complex, sign: int = +1, tail_tol: float = 1e-6
) -> np.ndarray:
    """Normalized superposition |alpha> + sign |-alpha> (sign = +-1)."""
    if sign not in (+1, -1):
        raise ShapeError(f"cat sign must be +1 or -1, got {sign}")
    plus = coherent_state(n_trunc, alpha, tail_tol)
    minus = coherent_state(n_trunc, -alpha, tail_tol)
    psi = plus + sign * minus
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise TruncationError(
            f"cat state with alpha={alpha} and sign={sign} has vanishing norm"
        )
    return psi / norm


def thermal_dm(n_trunc: int, nbar: float) -> np.ndarray:
    """Thermal state with mean occupation nbar, renormalized on truncation."""
    _check_trunc(n_trunc)
    if nbar < 0:
        raise InvalidStateError(f"thermal occupation must be >= 0, got {nbar}")
    if nbar == 0:
        return dm(fock_state(n_trunc, 0))
    ns = np.arange(n_trunc)
    logp = ns * (np.log(nbar) - np.log(1.0 + nbar))
    p = np.exp(logp - logp.max())
    p /= p.sum()
    return np.diag(p).astype(complex)


def dm(psi: np.ndarray) -> np.ndarray:
    """Density matrix |psi><psi| from a ket."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ShapeError(f"expected a ket vector, got shape {psi.shape}")
    return np.outer(psi, psi.conj())


def qubit_ground_dm() -> np.ndarray:
    """Qubit ground-state projector |g><g| in the (excited, ground) basis."""
    return np.diag([0.0, 1.0]).astype(complex)


def with_qubit_ground(rho_m: np.ndarray) -> np.ndarray:
    """Composite state |g><g| x rho_m."""
    rho_m = np.asarray(rho_m, dtype=complex)
    return kron(qubit_ground_dm(), rho_m)


# ------------------------------------------------------------------------
# predicates, expectations, and the Lindblad right-hand side
# ------------------------------------------------------------------------


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    """Hermiticity test relative to the largest matrix element."""
    m = np.asarray(m)
    scale = max(float(np.abs(m).max()), 1e-300)
    return float(np.abs(m - m.conj().T).max()) <= tol * scale


def validate_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-10,
    trace_tol: float = 1e-8,
    eig_floor: float = -1e-7,
    where: str = "",
) -> None:
    """Raise InvalidStateError unless rho is Hermitian, unit-trace and
    positive within the given tolerances."""
    rho = np.asarray(rho, dtype=complex)
    ctx = f" ({where})" if where else ""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"state is not a square matrix{ctx}")
    if not np.all(np.isfinite(rho.view(float))):
        raise InvalidStateError(f"state contains non-finite entries{ctx}")
    scale = max(float(np.abs(rho).max()), 1e-300)
    herm = float(np.abs(rho - rho.conj().T).max()) / scale
    if herm > herm_tol:
        raise InvalidStateError(
            f"state is not Hermitian: relative deviation {herm:.3e} "
            f"> {herm_tol:.1e}{ctx}"
        )
    tr_dev = abs(float(np.trace(rho).real) - 1.0) + abs(float(np.trace(rho).imag))
    if tr_dev > trace_tol:
        raise InvalidStateError(
            f"state trace deviates from 1 by {tr_dev:.3e} > {trace_tol:.1e}{ctx}"
        )
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if float(w.min()) < eig_floor:
        raise InvalidStateError(
            f"state has eigenvalue {w.min():.3e} below {eig_floor:.1e}{ctx}"
        )


def expect(op: np.ndarray, rho: np.ndarray) -> float:
    """Expectation value Tr(op rho) of a Hermitian operator; the imaginary
    residue is checked to be roundoff-small and discarded."""
    val = complex(np.trace(op @ rho))
    scale = max(abs(val), 1.0)
    if abs(val.imag) > 1e-8 * scale:
        raise InvalidStateError(
            f"expectation value has imaginary part {val.imag:.3e}; "
            "operator or state is malformed"
        )
    return val.real


def lindblad_rhs(
    h: np.ndarray,
    dissipators: list[DissipatorSpec] | list[tuple[float, np.ndarray]],
    rho: np.ndarray,
) -> np.ndarray:
    """Dense Lindblad generator action:
    -i[H, rho] + sum_k rate_k (L rho L^dag - (1/2){L^dag L, rho}).
    """
    h = np.asarray(h, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if rho.shape != (d, d) or h.shape != (d, d):
        raise ShapeError(
            f"Hamiltonian {h.shape} and state {rho.shape} must be square "
            "and share a dimension"
        )
    if not is_hermitian(h, tol=1e-12):
        raise InvalidDissipatorError("Hamiltonian is not Hermitian")
    out = -1j * (h @ rho - rho @ h)
    for rate, op in dissipators:
        if not np.isfinite(rate) or rate < 0:
            raise InvalidDissipatorError(
                f"dissipator rate must be finite and >= 0, got {rate}"
            )
        op = np.asarray(op, dtype=complex)
        if op.shape != (d, d):
            raise ShapeError(
                f"jump operator shape {op.shape} does not match state "
                f"dimension {d}"
            )
        if rate == 0.0:
            continue
        ldag_l = op.conj().T @ op
        out += rate * (
            op @ rho @ op.conj().T - 0.5 * (ldag_l @ rho + rho @ ldag_l)
        )
    return out


# ------------------------------------------------------------------------
# generalized-diagonal decomposition (consumed by the stepping engine)
# ------------------------------------------------------------------------


def extract_diagonals(
    m: np.ndarray, tol: float = 0.0
) -> list[tuple[int, np.ndarray]]:
    """Decompose a dense matrix into its nonzero generalized diagonals.

    Returns (offset, vec) pairs with the convention m[i, i + offset] = vec[i]
    on the valid index range and vec zero elsewhere; vec always has the full
    matrix dimension so consumers can index without range arithmetic.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got {m.shape}")
    d = m.shape[0]
    out = []
    for k in range(-(d - 1), d):
        v = np.zeros(d, dtype=complex)
        if k >= 0:
            idx = np.arange(0, d - k)
        else:
            idx = np.arange(-k, d)
        v[idx] = m[idx, idx + k]
        if np.abs(v).max() > tol:
            out.append((k, v))
    return out


def _check_trunc(n_trunc: int) -> None:
    if not isinstance(n_trunc, (int, np.integer)) or n_trunc < 2:
        raise TruncationError(
            f"Fock truncation must be an integer >= 2, got {n_trunc!r}"
        )
