"""Acceptance gate: one test per numbered release criterion.

Each test pins the quantitative bar for its criterion; the conftest hook
prints a per-criterion PASS/FAIL summary at the end of the run. The
expensive propagations run once in module fixtures and are shared with
criterion 7, which audits trace, hermiticity, and positivity at every
recorded sample of every run performed here.
"""

import itertools
import math
import time
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import null_space

from conftest import TWO_PI, ci_point, desk_point
from phonpair import circuit as cm
from phonpair import cli
from phonpair import effective_model as em
from phonpair import engine
from phonpair import full_model as fm
from phonpair import kernel_oracle as ko
from phonpair import observables as ob
from phonpair.config import parse_config
from phonpair.operators import (
    destroy,
    dm,
    fock_state,
    partial_trace_qubit,
    with_qubit_ground,
)

# conservation metrics from every propagation in criteria 4-6, audited
# by criterion 7
AUDIT: list[tuple[str, dict]] = []


def conservation_probe(rho: np.ndarray) -> dict:
    tr = abs(complex(np.trace(rho)) - 1.0)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    return {"trace_err": tr, "herm_err": herm, "min_eig": min_eig}


# --------------------------------------------------------------------------
# shared expensive runs
# --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def steady_oracle():
    """Brute-force stationary state of the pair master equation.

    Independent of the production path end to end: the Hamiltonian and
    channels are assembled here from raw ladder matrices, the
    Liouvillian is vectorized row-major (the engine builds column-major),
    and the stationary state comes from a dense SVD null space instead
    of time propagation.
    """
    t0 = time.perf_counter()
    p = desk_point(n_trunc=30)
    eff = em.effective_params(p)
    n = p.n_trunc
    a = destroy(n)
    ad = a.conj().T
    num = ad @ a
    h = (
        (eff.delta1 + eff.delta2) * num
        + eff.chi * (a @ a)
        + np.conj(eff.chi) * (ad @ ad)
        + eff.delta_k * (num @ num)
    )
    g_down, g_up = p.gamma_rates()
    channels = [
        (eff.Gamma1_minus + g_down, a),
        (eff.Gamma1_plus + g_up, ad),
        (eff.Gamma2_minus, a @ a),
        (eff.Gamma2_plus, ad @ ad),
    ]
    eye = np.eye(n)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, op in channels:
        opd = op.conj().T @ op
        lv += rate * (
            np.kron(op, op.conj())
            - 0.5 * np.kron(opd, eye)
            - 0.5 * np.kron(eye, opd.T)
        )
    basis = null_space(lv)
    assert basis.shape[1] == 1, "stationary state is not unique"
    rho = basis[:, 0].reshape(n, n)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    n_ss = float(np.real(np.trace(num @ rho)))
    return {
        "mean_phonon": n_ss,
        "alpha": math.sqrt(n_ss),
        "elapsed": time.perf_counter() - t0,
    }


@pytest.fixture(scope="module")
def cat_evolution(fig_point):
    """Vacuum driven at eps = 4g for one pair-damping time, 60 levels."""
    t0 = time.perf_counter()
    eff = em.effective_params(fig_point)
    t_final = 1.0 / eff.Gamma2_minus
    record = em.propagate_effective(
        eff,
        fig_point,
        dm(fock_state(fig_point.n_trunc, 0)),
        t_final,
        record_interval=t_final / 20.0,
        snapshot_times=(t_final,),
        extra_record=lambda t, rho: conservation_probe(rho),
    )
    return {
        "record": record,
        "rho": record.snapshots[-1][1],
        "elapsed": time.perf_counter() - t0,
    }


@pytest.fixture(scope="module")
def benchmark_ci():
    """Full against effective on the scaled-down benchmark preset."""
    cfg = parse_config("full_vs_effective_ci")
    assert not cfg.align_rotation
    eff = em.effective_params(cfg.params)
    unit = cfg.time_unit(eff.Gamma2_minus)
    t_final = cfg.horizon * unit
    interval = cfg.record_interval * unit
    rho_m = cfg.initial_state_dm()
    n = cfg.params.n_trunc

    t0 = time.perf_counter()
    eff_states: list[np.ndarray] = []

    def stash(t, rho):
        eff_states.append(rho.copy())
        return conservation_probe(rho)

    eff_record = em.propagate_effective(
        eff,
        cfg.params,
        rho_m,
        t_final,
        record_interval=interval,
        include_frame_term=cfg.include_frame_term,
        extra_record=stash,
    )

    counter = itertools.count()

    def fid_probe(t, rho):
        out = conservation_probe(rho)
        target = eff_states[next(counter)]
        out["fidelity"] = ob.uhlmann_fidelity(
            partial_trace_qubit(rho, n), target
        )
        return out

    full_record = fm.propagate_full(
        cfg.params,
        rho0=with_qubit_ground(rho_m),
        t_final=t_final,
        frame=cfg.frame,
        record_interval=interval,
        extra_record=fid_probe,
    )
    return {
        "full": full_record,
        "eff": eff_record,
        "elapsed": time.perf_counter() - t0,
    }


# --------------------------------------------------------------------------
# criteria
# --------------------------------------------------------------------------


def test_criterion_01_pair_rates_match_term_enumeration(fig_point):
    t0 = time.perf_counter()
    eff = em.effective_params(fig_point)
    m22 = ko.assemble_M22(fig_point)
    m23 = ko.assemble_M23(fig_point)
    kappa = fig_point.kappa
    assert eff.g / TWO_PI == pytest.approx(36e3, rel=1e-9)
    assert eff.Gamma2_minus == pytest.approx(
        4.0 * eff.g**2 / kappa, rel=1e-9
    )
    assert eff.Gamma2_minus / TWO_PI == pytest.approx(51.84e3, rel=1e-9)
    assert abs(eff.chi) == pytest.approx(
        2.0 * eff.eps * eff.g / kappa, rel=1e-9
    )
    # dual route: same numbers out of the independent term enumeration
    assert m22.rates[0] == pytest.approx(eff.Gamma2_minus, rel=1e-9)
    assert m23.chi == pytest.approx(eff.chi, rel=1e-9)
    assert time.perf_counter() - t0 < 1.0


def test_criterion_02_response_integral_vs_closed_form(fig_point):
    t0 = time.perf_counter()
    kappa, omega_m = fig_point.kappa, fig_point.omega_m
    for mult in (0.0, 1.0, 2.0, 4.0):
        delta = mult * omega_m
        numeric = ko.response_integral_numeric(delta, kappa)
        closed = 1.0 / (kappa / 2.0 + 1j * delta)
        assert abs(numeric - closed) <= 1e-6 * abs(closed), mult
    assert time.perf_counter() - t0 < 1.0


def test_criterion_03_frame_residual_quadratic_in_coupling():
    p = ci_point(n_trunc=15)
    half = replace(p, g_z=p.g_z / 2.0)
    ratio = fm.sw_residual(p) / fm.sw_residual(half)
    assert 3.2 <= ratio <= 4.8


@settings(max_examples=6, deadline=None)
@given(
    n_trunc=st.sampled_from([24, 28, 32]),
    start_level=st.sampled_from([0, 1]),
)
def test_criterion_04_parity_pinned_under_pair_channels(
    n_trunc, start_level
):
    p = replace(desk_point(n_trunc=n_trunc), gamma=0.0)
    eff = replace(
        em.effective_params(p), Gamma1_minus=0.0, Gamma1_plus=0.0
    )
    t_final = 5.0 / eff.Gamma2_minus
    record = em.propagate_effective(
        eff,
        p,
        dm(fock_state(n_trunc, start_level)),
        t_final,
        record_interval=t_final / 25.0,
        extra_record=lambda t, rho: conservation_probe(rho),
    )
    AUDIT.append(
        (f"parity n={n_trunc} start={start_level}", record.observables)
    )
    target = 1.0 if start_level == 0 else -1.0
    assert np.max(np.abs(record.observables["parity"] - target)) < 1e-8


def test_criterion_05_cat_formation(steady_oracle, cat_evolution, fig_point):
    t0 = time.perf_counter()
    eff = em.effective_params(fig_point)
    # candidate amplitude from rate balance, confirmed by the dense oracle
    candidate = 2.0 * abs(eff.chi) / eff.Gamma2_minus
    assert candidate == pytest.approx(4.0, rel=1e-12)
    assert abs(steady_oracle["mean_phonon"] / candidate - 1.0) < 0.02

    rho = cat_evolution["rho"]
    grid = ob.wigner(
        rho, x_min=-6.0, x_max=6.0, p_min=-6.0, p_max=6.0, n_x=241, n_p=241
    )
    xs, dens = ob.marginal(grid, "x")
    peaks = ob.marginal_peaks(xs, dens)
    assert len(peaks) == 2
    assert peaks[0][0] == pytest.approx(-peaks[1][0], abs=2.0 * grid.dx)
    assert ob.negativity_volume(grid) > 0.05
    fit = ob.best_fit_cat(rho)
    assert fit.sign == 1
    assert fit.fidelity > 0.95
    alpha_ref = steady_oracle["alpha"]
    assert abs(abs(fit.alpha) - alpha_ref) <= 0.15 * alpha_ref
    total = (
        steady_oracle["elapsed"]
        + cat_evolution["elapsed"]
        + (time.perf_counter() - t0)
    )
    assert total < 60.0


def test_criterion_06_full_tracks_effective_on_benchmark(benchmark_ci):
    assert benchmark_ci["elapsed"] < 60.0
    full = benchmark_ci["full"]
    eff_record = benchmark_ci["eff"]
    kt = full.kappa_t
    fid = full.observables["fidelity"]
    assert fid[0] == pytest.approx(1.0, abs=1e-9)
    n_full = full.observables["mean_phonon"]
    n_eff = eff_record.observables["mean_phonon"]
    window = (kt >= 5.0) & (n_eff > 1e-12)
    deviation = float(np.max(np.abs(n_full[window] / n_eff[window] - 1.0)))
    late = fid[kt >= 15.0]
    assert float(np.min(late)) >= 0.95
    assert float(fid[-1]) >= 0.97
    assert deviation <= 0.10


def test_criterion_07_conservation_at_every_sample(
    cat_evolution, benchmark_ci
):
    assert engine.CHECK_TOLS == (1e-08, 1e-09, -1e-07)
    audited = list(AUDIT)
    audited.append(("pair-driven cat", cat_evolution["record"].observables))
    audited.append(("benchmark full", benchmark_ci["full"].observables))
    audited.append(
        ("benchmark effective", benchmark_ci["eff"].observables)
    )
    assert len(audited) >= 4  # several independent propagations
    for label, obs in audited:
        assert float(np.max(obs["trace_err"])) < 1e-8, label
        assert float(np.max(obs["herm_err"])) < 1e-9, label
        assert float(np.min(obs["min_eig"])) > -1e-7, label


def test_criterion_08_phase_space_anchors():
    dim = 20
    for level, anchor in ((0, 1.0 / math.pi), (1, -1.0 / math.pi)):
        rho = dm(fock_state(dim, level))
        ladder = ob.wigner(
            rho,
            x_min=0.0,
            x_max=1.0,
            p_min=0.0,
            p_max=1.0,
            n_x=2,
            n_p=2,
            check_window=False,
        ).values[0, 0]
        direct = float(ob.wigner_direct(rho, [(0.0, 0.0)])[0])
        assert ladder == pytest.approx(anchor, rel=1e-9)
        assert direct == pytest.approx(anchor, rel=1e-9)
        assert ladder == pytest.approx(direct, rel=1e-9)
    cat = ob.cat_state(60, 2.0)
    grid = ob.wigner(np.outer(cat, cat.conj()), check_window=False)
    assert grid.riemann_norm() == pytest.approx(1.0, abs=5e-3)
    vac = ob.wigner(dm(fock_state(20, 0)))
    assert vac.riemann_norm() == pytest.approx(1.0, abs=5e-3)


def test_criterion_09_longitudinal_drive_cancellation():
    t0 = time.perf_counter()
    c = cm.CircuitParams(
        E_C=TWO_PI * 5e9, E_J=TWO_PI * 10e9, n_g0=0.3, lam=0.01, n_d=0.02
    )
    rng = np.random.default_rng(17)
    for theta0 in rng.uniform(0.05, math.pi - 0.05, size=100):
        _, omega, a_z = cm.drive_matching(c, float(theta0))
        assert abs(a_z) <= 1e-12 * abs(omega), theta0
    degen = cm.CircuitParams(
        E_C=TWO_PI * 5e9, E_J=TWO_PI * 10e9, n_g0=0.5, lam=0.01
    )
    wq, _, bias = cm.qubit_eigenbasis(degen)
    g_x, g_z = cm.electromech_couplings(degen)
    assert bias == 0.0
    assert g_z == 0.0  # bit-exact, not a tolerance
    assert wq == degen.E_J
    assert time.perf_counter() - t0 < 1.0


def test_criterion_10_kernel_identity_block(tmp_path):
    t0 = time.perf_counter()
    rc = cli.main(["--out", str(tmp_path), "verify"])
    elapsed = time.perf_counter() - t0
    assert rc == 0
    text = (tmp_path / "verify_report.txt").read_text()
    assert "verification overall: PASS" in text
    report = ko.verify_M32_zero()
    assert report.passed
    assert report.max_abs < 1e-14
    assert elapsed < 1.0
