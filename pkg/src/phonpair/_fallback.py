"""Pure-numpy stepping backend.

Implements the same packed-generator contract as the compiled kernel in
``_core``: the Lindblad right-hand side is assembled from generalized
diagonals (offset k, length-d value vector v, meaning M[i, i+k] = v[i]) and
advanced with classical fixed-step RK4. Selection between the two backends
happens in ``engine``; both must produce identical trajectories up to
floating-point summation order.
"""

from __future__ import annotations

import numpy as np


def dense_from_diag(off: int, vec: np.ndarray) -> np.ndarray:
    """Dense matrix of a single generalized diagonal."""
    d = vec.shape[0]
    m = np.zeros((d, d), dtype=complex)
    if off >= 0:
        idx = np.arange(0, d - off)
    else:
        idx = np.arange(-off, d)
    m[idx, idx + off] = vec[idx]
    return m


def rk4_block(
    rho: np.ndarray,
    t0: float,
    dt: float,
    n_steps: int,
    h_offs: np.ndarray,
    h_omegas: np.ndarray,
    h_vecs: np.ndarray,
    j_rates: np.ndarray,
    j_starts: np.ndarray,
    j_offs: np.ndarray,
    j_vecs: np.ndarray,
    work: np.ndarray | None = None,
) -> float:
    """Advance rho in place by n_steps RK4 steps of size dt from time t0.

    The generator is dH(t) = sum_m exp(i omega_m t) diag(h_offs[m], h_vecs[m])
    acting as the non-Hermitian part B = H_nh rho with
    drho/dt = -i (B - B^dag) + sum_jumps rate L rho L^dag; the anticommutator
    -(1/2){L^dag L, rho} is folded into the omega = 0 entries of the H list
    by the packer. Returns the final time.
    """
    d = rho.shape[0]
    n_h = h_offs.shape[0]
    h_dense = np.empty((n_h, d, d), dtype=complex)
    for m in range(n_h):
        h_dense[m] = dense_from_diag(int(h_offs[m]), h_vecs[m])
    jumps = []
    for m in range(j_rates.shape[0]):
        l_op = np.zeros((d, d), dtype=complex)
        for dd in range(int(j_starts[m]), int(j_starts[m + 1])):
            l_op += dense_from_diag(int(j_offs[dd]), j_vecs[dd])
        jumps.append((float(j_rates[m]), l_op, l_op.conj().T))

    def stage(r_in: np.ndarray, t: float) -> np.ndarray:
        coef = np.exp(1j * h_omegas * t)
        h_nh = np.einsum("m,mij->ij", coef, h_dense)
        b = h_nh @ r_in
        y = -1j * (b - b.conj().T)
        for rate, l_op, l_dag in jumps:
            y += rate * ((l_op @ r_in) @ l_dag)
        return y

    t = float(t0)
    for s in range(int(n_steps)):
        k1 = stage(rho, t)
        k2 = stage(rho + (0.5 * dt) * k1, t + 0.5 * dt)
        k3 = stage(rho + (0.5 * dt) * k2, t + 0.5 * dt)
        k4 = stage(rho + dt * k3, t + dt)
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        # project back onto the Hermitian subspace: the stage assembly is
        # exactly Hermitian for Hermitian input, but rounding seeds the
        # anti-Hermitian sector, where the symmetrized form -i(B - B^dag)
        # is exponentially unstable at rates up to max(L^dag L)/2
        rho[...] = 0.5 * (rho + rho.conj().T)
        t = t0 + (s + 1) * dt
    return t
