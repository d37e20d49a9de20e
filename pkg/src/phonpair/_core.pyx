# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernel.

Same contract as the numpy backend in ``_fallback``: a Lindblad generator
packed as generalized diagonals (offset k, value vector v with
M[i, i+k] = v[i]), advanced in place with classical fixed-step RK4. The
coherent part is assembled as -i (B - B^dag) with B = H_nh rho, which is
exactly Hermitian for Hermitian input; each step ends with a projection
onto the Hermitian subspace because that symmetrized form amplifies
anti-Hermitian rounding noise (growth up to max(L^dag L)/2).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

ctypedef double complex cplx


cdef inline void _rhs(
    cplx[:, ::1] r_in,
    double t,
    const long[::1] h_offs,
    const double[::1] h_omegas,
    cplx[:, ::1] h_vecs,
    const double[::1] j_rates,
    const long[::1] j_starts,
    const long[::1] j_offs,
    cplx[:, ::1] j_vecs,
    cplx[:, ::1] bbuf,
    cplx[:, ::1] wbuf,
    cplx[:, ::1] ybuf,
    int d,
) noexcept nogil:
    cdef int n_h = <int> h_offs.shape[0]
    cdef int n_j = <int> j_rates.shape[0]
    cdef int m, dd, ii, jj, koff, i0, i1
    cdef double om, ph, rate
    cdef cplx c, cv

    for ii in range(d):
        for jj in range(d):
            bbuf[ii, jj] = 0

    # B = H_nh(t) rho, one row-axpy per diagonal row
    for m in range(n_h):
        koff = <int> h_offs[m]
        om = h_omegas[m]
        if om == 0.0:
            c = 1.0
        else:
            ph = om * t
            c = cos(ph) + 1j * sin(ph)
        if koff >= 0:
            i0 = 0
            i1 = d - koff
        else:
            i0 = -koff
            i1 = d
        for ii in range(i0, i1):
            cv = c * h_vecs[m, ii]
            if cv != 0:
                for jj in range(d):
                    bbuf[ii, jj] = bbuf[ii, jj] + cv * r_in[ii + koff, jj]

    # y = -i (B - B^dag): exactly Hermitian for Hermitian input
    for ii in range(d):
        for jj in range(d):
            ybuf[ii, jj] = -1j * (bbuf[ii, jj] - bbuf[jj, ii].conjugate())

    # y += rate * (L rho) L^dag per jump channel
    for m in range(n_j):
        rate = j_rates[m]
        if rate == 0.0:
            continue
        for ii in range(d):
            for jj in range(d):
                wbuf[ii, jj] = 0
        for dd in range(<int> j_starts[m], <int> j_starts[m + 1]):
            koff = <int> j_offs[dd]
            if koff >= 0:
                i0 = 0
                i1 = d - koff
            else:
                i0 = -koff
                i1 = d
            for ii in range(i0, i1):
                cv = j_vecs[dd, ii]
                if cv != 0:
                    for jj in range(d):
                        wbuf[ii, jj] = wbuf[ii, jj] + cv * r_in[ii + koff, jj]
        for dd in range(<int> j_starts[m], <int> j_starts[m + 1]):
            koff = <int> j_offs[dd]
            if koff >= 0:
                i0 = 0
                i1 = d - koff
            else:
                i0 = -koff
                i1 = d
            for ii in range(d):
                for jj in range(i0, i1):
                    ybuf[ii, jj] = ybuf[ii, jj] + rate * wbuf[ii, jj + koff] * j_vecs[dd, jj].conjugate()


def rk4_block(
    rho_arr,
    double t0,
    double dt,
    long n_steps,
    h_offs_arr,
    h_omegas_arr,
    h_vecs_arr,
    j_rates_arr,
    j_starts_arr,
    j_offs_arr,
    j_vecs_arr,
    work_arr=None,
):
    """Advance rho_arr in place by n_steps RK4 steps; returns the final time.

    Argument layout matches ``_fallback.rk4_block``. ``work_arr`` may carry a
    preallocated (5, d, d) complex scratch block to avoid per-call
    allocation.
    """
    cdef cplx[:, ::1] rho = rho_arr
    cdef int d = rho.shape[0]
    if work_arr is None:
        work_arr = np.empty((5, d, d), dtype=complex)
    cdef cplx[:, :, ::1] work = work_arr
    cdef cplx[:, ::1] bbuf = work[0]
    cdef cplx[:, ::1] wbuf = work[1]
    cdef cplx[:, ::1] ybuf = work[2]
    cdef cplx[:, ::1] acc = work[3]
    cdef cplx[:, ::1] tmp = work[4]

    cdef const long[::1] h_offs = h_offs_arr
    cdef const double[::1] h_omegas = h_omegas_arr
    cdef cplx[:, ::1] h_vecs = h_vecs_arr
    cdef const double[::1] j_rates = j_rates_arr
    cdef const long[::1] j_starts = j_starts_arr
    cdef const long[::1] j_offs = j_offs_arr
    cdef cplx[:, ::1] j_vecs = j_vecs_arr

    cdef double t = t0
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef long s
    cdef int ii, jj
    cdef cplx herm

    with nogil:
        for s in range(n_steps):
            # k1
            _rhs(rho, t, h_offs, h_omegas, h_vecs,
                 j_rates, j_starts, j_offs, j_vecs, bbuf, wbuf, ybuf, d)
            for ii in range(d):
                for jj in range(d):
                    acc[ii, jj] = ybuf[ii, jj]
                    tmp[ii, jj] = rho[ii, jj] + half * ybuf[ii, jj]
            # k2
            _rhs(tmp, t + half, h_offs, h_omegas, h_vecs,
                 j_rates, j_starts, j_offs, j_vecs, bbuf, wbuf, ybuf, d)
            for ii in range(d):
                for jj in range(d):
                    acc[ii, jj] = acc[ii, jj] + 2.0 * ybuf[ii, jj]
                    tmp[ii, jj] = rho[ii, jj] + half * ybuf[ii, jj]
            # k3
            _rhs(tmp, t + half, h_offs, h_omegas, h_vecs,
                 j_rates, j_starts, j_offs, j_vecs, bbuf, wbuf, ybuf, d)
            for ii in range(d):
                for jj in range(d):
                    acc[ii, jj] = acc[ii, jj] + 2.0 * ybuf[ii, jj]
                    tmp[ii, jj] = rho[ii, jj] + dt * ybuf[ii, jj]
            # k4
            _rhs(tmp, t + dt, h_offs, h_omegas, h_vecs,
                 j_rates, j_starts, j_offs, j_vecs, bbuf, wbuf, ybuf, d)
            for ii in range(d):
                for jj in range(d):
                    acc[ii, jj] = acc[ii, jj] + ybuf[ii, jj]
                    rho[ii, jj] = rho[ii, jj] + sixth * acc[ii, jj]
            # Hermitian projection, elementwise identical to the numpy
            # backend's 0.5 * (rho + rho.conj().T)
            for ii in range(d):
                rho[ii, ii] = 0.5 * (rho[ii, ii] + rho[ii, ii].conjugate())
                for jj in range(ii + 1, d):
                    herm = 0.5 * (rho[ii, jj] + rho[jj, ii].conjugate())
                    rho[ii, jj] = herm
                    rho[jj, ii] = herm.conjugate()
            t = t0 + (s + 1) * dt
    return t
