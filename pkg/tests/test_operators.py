"""Truncated Fock-space operator algebra and state constructors."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonpair import operators as op
from phonpair.errors import (
    InvalidStateError,
    ShapeError,
    TruncationError,
)


def test_ladder_matrix_elements():
    n = 7
    a = op.destroy(n)
    ad = op.create(n)
    for k in range(1, n):
        assert a[k - 1, k] == pytest.approx(math.sqrt(k))
    assert np.array_equal(ad, a.conj().T)
    num = op.number(n)
    assert np.allclose(ad @ a, num)


def test_commutator_truncation_corner():
    # [a, a^dag] = 1 everywhere except the top Fock level, where the cut
    # removes the outgoing ladder rung
    n = 9
    a = op.destroy(n)
    comm = a @ op.create(n) - op.create(n) @ a
    expected = np.eye(n)
    expected[-1, -1] = -(n - 1)
    assert np.allclose(comm, expected)


def test_parity_diagonal():
    p = op.parity(6)
    assert np.allclose(np.diag(p), [1, -1, 1, -1, 1, -1])


def test_pauli_algebra():
    sx, sy, sz, sm, sp = (op.pauli(k) for k in ("x", "y", "z", "minus", "plus"))
    assert np.allclose(sx @ sy - sy @ sx, 2j * sz)
    assert np.allclose(sm, (sx - 1j * sy) / 2)
    assert np.allclose(sp @ sm + sm @ sp, np.eye(2))
    # basis order (|e>, |g>): sigma_z |e> = +|e>
    assert sz[0, 0] == 1.0 and sz[1, 1] == -1.0


def test_fock_and_dm():
    v = op.fock_state(5, 3)
    assert v[3] == 1.0 and np.sum(np.abs(v)) == 1.0
    rho = op.dm(v)
    assert rho[3, 3] == 1.0 and np.trace(rho) == pytest.approx(1.0)
    with pytest.raises(TruncationError):
        op.fock_state(5, 5)


def test_coherent_state_moments():
    alpha = 1.2 - 0.4j
    psi = op.coherent_state(40, alpha)
    assert np.vdot(psi, psi) == pytest.approx(1.0)
    a = op.destroy(40)
    assert np.vdot(psi, a @ psi) == pytest.approx(alpha)
    nbar = np.vdot(psi, op.number(40) @ psi)
    assert nbar == pytest.approx(abs(alpha) ** 2)


def test_coherent_state_truncation_guard():
    with pytest.raises(TruncationError):
        op.coherent_state(10, 4.0)


def test_cat_state_parity_sectors():
    even = op.cat_state(50, 2.0, +1)
    odd = op.cat_state(50, 2.0, -1)
    par = op.parity(50)
    assert np.vdot(even, par @ even) == pytest.approx(1.0)
    assert np.vdot(odd, par @ odd) == pytest.approx(-1.0)
    assert np.vdot(even, odd) == pytest.approx(0.0, abs=1e-14)
    # even cat populates only even Fock levels (up to amplitude rounding)
    assert np.max(np.abs(even[1::2])) < 1e-15


def test_thermal_dm():
    nbar = 0.75
    rho = op.thermal_dm(60, nbar)
    assert np.trace(rho) == pytest.approx(1.0)
    assert op.expect(op.number(60), rho) == pytest.approx(nbar, rel=1e-12)
    # geometric ratio between adjacent populations
    ratio = rho[1, 1] / rho[0, 0]
    assert ratio == pytest.approx(nbar / (1.0 + nbar), rel=1e-12)


def test_kron_ordering_qubit_first():
    # composite basis |q> x |n>, index i = q * n_mech + n
    n = 4
    sz = op.embed_qubit(op.pauli("z"), n)
    num = op.embed_mech(op.number(n))
    d = np.diag(sz)
    assert np.allclose(d[:n], 1.0) and np.allclose(d[n:], -1.0)
    assert np.allclose(np.diag(num), [0, 1, 2, 3, 0, 1, 2, 3])


def test_partial_traces():
    n = 6
    rho_m = op.thermal_dm(n, 0.4)
    rho = op.with_qubit_ground(rho_m)
    assert np.allclose(op.partial_trace_qubit(rho, n), rho_m)
    rq = op.partial_trace_mech(rho, n)
    assert np.allclose(rq, op.qubit_ground_dm())
    # trace consistency
    assert np.trace(rq) == pytest.approx(1.0)


def test_lindblad_rhs_matches_dense_reference():
    rng = np.random.default_rng(3)
    n = 5
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = h + h.conj().T
    l1 = op.destroy(n)
    l2 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = rho + rho.conj().T
    rho = rho / np.trace(rho)
    specs = [op.DissipatorSpec(0.3, l1), op.DissipatorSpec(1.7, l2)]
    got = op.lindblad_rhs(h, specs, rho)
    want = -1j * (h @ rho - rho @ h)
    for rate, l_op in ((0.3, l1), (1.7, l2)):
        ll = l_op.conj().T @ l_op
        want = want + rate * (l_op @ rho @ l_op.conj().T - 0.5 * (ll @ rho + rho @ ll))
    assert np.max(np.abs(got - want)) < 1e-12 * np.max(np.abs(want))


def test_validate_density_matrix_rejects_bad_inputs():
    good = op.dm(op.fock_state(4, 0))
    op.validate_density_matrix(good)
    with pytest.raises(InvalidStateError):
        op.validate_density_matrix(np.zeros((3, 4), dtype=complex))
    bad_trace = good * 2.0
    with pytest.raises(InvalidStateError):
        op.validate_density_matrix(bad_trace)
    nonherm = good.astype(complex).copy()
    nonherm[0, 1] = 0.5
    with pytest.raises(InvalidStateError):
        op.validate_density_matrix(nonherm)


def test_extract_diagonals_round_trip():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    diags = op.extract_diagonals(m)
    back = np.zeros_like(m)
    for off, vec in diags:
        idx = np.arange(0, 6 - off) if off >= 0 else np.arange(-off, 6)
        back[idx, idx + off] += vec[idx] if len(vec) == 6 else vec
    assert np.allclose(back, m)


@settings(max_examples=25, deadline=None)
@given(
    re_a=st.floats(-1.8, 1.8),
    im_a=st.floats(-1.8, 1.8),
)
def test_coherent_state_normalized_property(re_a, im_a):
    psi = op.coherent_state(36, re_a + 1j * im_a)
    assert abs(np.vdot(psi, psi) - 1.0) < 1e-10


@settings(max_examples=20, deadline=None)
@given(nbar=st.floats(0.0, 3.0))
def test_thermal_dm_mean_property(nbar):
    rho = op.thermal_dm(80, nbar)
    assert abs(op.expect(op.number(80), rho) - nbar) < 1e-8 * max(1.0, nbar)
