"""Fixed-step propagation engine: planning, stepping, checks, backends."""

import math
import subprocess
import sys

import numpy as np
import pytest

from phonpair import _core, _fallback, effective_model, engine
from phonpair.errors import NumericalError
from phonpair.operators import (
    DissipatorSpec,
    destroy,
    dm,
    fock_state,
    lindblad_rhs,
    number,
)

from conftest import ci_point


def small_generator(n_trunc=10):
    p = ci_point(n_trunc=n_trunc)
    eff = effective_model.effective_params(p)
    return effective_model.build_generator(eff, p), p, eff


def test_plan_records_grid():
    dt, spr, n_rec = engine.plan_records(1.0, dt_max=0.3, record_interval=0.25)
    # records land exactly on multiples of the requested interval
    assert spr * dt == pytest.approx(0.25)
    assert n_rec * spr * dt == pytest.approx(1.0)
    assert dt <= 0.3


def test_plan_records_rejects_bad_horizon():
    with pytest.raises(Exception):
        engine.plan_records(-1.0, dt_max=0.1)


def test_rhs_matches_dense_lindblad():
    gen, p, eff = small_generator()
    rng = np.random.default_rng(5)
    n = p.n_trunc
    rho = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = rho + rho.conj().T
    rho = rho / np.trace(rho)
    got = gen.rhs(0.0, rho)
    # dense_hamiltonian carries the -i/2 damping; peel it off to recover the
    # Hermitian Hamiltonian the packing started from
    h_nh = gen.dense_hamiltonian(0.0)
    jumps = gen.dense_jumps()
    damp = sum(rate * (l.conj().T @ l) for rate, l in jumps)
    h = h_nh + 0.5j * damp
    assert np.max(np.abs(h - h.conj().T)) < 1e-10 * np.max(np.abs(h))
    specs = [DissipatorSpec(rate, l_op) for rate, l_op in jumps]
    want = lindblad_rhs(h, specs, rho)
    assert np.max(np.abs(got - want)) < 1e-12 * max(1.0, np.max(np.abs(want)))


def test_propagator_matches_expm_on_static_generator():
    # time-independent Liouvillian: RK4 against the exact matrix exponential
    gen, p, eff = small_generator(n_trunc=8)
    n = p.n_trunc
    l_super = effective_model.build_effective_liouvillian(eff, p)
    rho0 = dm(fock_state(n, 0))
    t = 0.2 / eff.Gamma2_minus
    dt = gen.stability_dt() * 0.3
    steps = max(1, int(math.ceil(t / dt)))
    rho = rho0.copy()
    times, obs, snaps, rho_out = engine.propagate_generator(
        gen, rho, dt=t / steps, steps_per_record=steps, n_records=1
    )
    from scipy.linalg import expm

    # the superoperator uses the column-major stacking convention
    vec = expm(l_super * t) @ rho0.T.reshape(-1)
    want = vec.reshape(n, n).T
    assert np.max(np.abs(rho_out - want)) < 1e-8


def test_conservation_check_trips_on_scaled_state():
    gen, p, eff = small_generator(n_trunc=8)
    bad = dm(fock_state(p.n_trunc, 0)) * 1.001  # trace off by 1e-3
    with pytest.raises(NumericalError):
        engine.propagate_generator(
            gen, bad, dt=gen.stability_dt() * 0.1, steps_per_record=5, n_records=2
        )


def test_snapshot_records_collects_requested_indices():
    gen, p, eff = small_generator(n_trunc=8)
    rho = dm(fock_state(p.n_trunc, 0))
    dt = gen.stability_dt() * 0.2
    final_t, obs, snaps, rho_out = engine.propagate_generator(
        gen, rho.copy(), dt=dt, steps_per_record=4, n_records=6,
        snapshot_records={0, 3, 6},
    )
    assert [round(t / (4 * dt)) for t, _ in snaps] == [0, 3, 6]
    assert all(s.shape == rho.shape for _, s in snaps)
    # last snapshot is the final state
    assert np.allclose(snaps[-1][1], rho_out)


def test_backends_step_identically():
    # the compiled kernel and the pure-python fallback implement the same
    # update; they may differ only in complex multiply rounding (ulps)
    gen, p, eff = small_generator(n_trunc=12)
    rho0 = dm(fock_state(p.n_trunc, 1))
    dt = gen.stability_dt() * 0.3
    args = (
        gen.h_offs, gen.h_omegas, gen.h_vecs,
        gen.j_rates, gen.j_starts, gen.j_offs, gen.j_vecs,
    )
    ra = rho0.copy()
    rb = rho0.copy()
    _core.rk4_block(ra, 0.0, dt, 25, *args)
    _fallback.rk4_block(rb, 0.0, dt, 25, *args)
    assert np.max(np.abs(ra - rb)) < 1e-13 * max(1.0, float(np.max(np.abs(ra))))


def test_backend_env_selection():
    # PHONPAIR_BACKEND=fallback must take effect at import time
    code = (
        "import os; os.environ['PHONPAIR_BACKEND'] = 'fallback'; "
        "from phonpair import engine; print(engine.backend_name())"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "fallback"


def test_decay_rate_matches_analytic():
    # pure single-phonon loss: <n>(t) = n0 exp(-gamma t)
    p = ci_point(n_trunc=6).with_(Omega=0.0, g_x=0.0, g_z=0.0, gamma=2 * math.pi * 2e3)
    eff = effective_model.effective_params(p)
    rec = effective_model.propagate_effective(
        eff, p, dm(fock_state(6, 2)), t_final=0.5 / p.gamma, record_every=100
    )
    want = 2.0 * np.exp(-p.gamma * rec.times)
    assert np.max(np.abs(rec.observables["mean_phonon"] - want)) < 1e-6
