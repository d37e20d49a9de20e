"""Charge-qubit circuit mapped to model parameters and back."""

import math

import numpy as np
import pytest

from phonpair import circuit as cm
from phonpair.errors import ConfigError

TWO_PI = 2.0 * math.pi


def sample_circuit(n_g0=0.3, lam=0.01, n_d=0.02):
    return cm.CircuitParams(
        E_C=TWO_PI * 5e9, E_J=TWO_PI * 10e9, n_g0=n_g0, lam=lam, n_d=n_d
    )


def test_eigenbasis_geometry():
    c = sample_circuit()
    wq, th, bias = cm.qubit_eigenbasis(c)
    assert wq == pytest.approx(math.hypot(c.E_J, bias))
    assert math.tan(th) == pytest.approx(c.E_J / bias)
    s, cth = cm.eigenbasis_cosines(c)
    assert s == pytest.approx(math.sin(th), rel=1e-14)
    assert cth == pytest.approx(math.cos(th), rel=1e-14)
    assert s * s + cth * cth == pytest.approx(1.0, rel=1e-14)


def test_charge_degeneracy_limit_exact():
    c = sample_circuit(n_g0=0.5)
    wq, th, bias = cm.qubit_eigenbasis(c)
    assert bias == 0.0
    assert wq == c.E_J  # bit-exact, not approximately
    g_x, g_z = cm.electromech_couplings(c)
    assert g_z == 0.0  # bit-exact
    assert g_x == -4.0 * c.E_C * c.lam


def test_degenerate_qubit_rejected():
    c = cm.CircuitParams(E_C=TWO_PI * 5e9, E_J=0.0, n_g0=0.5, lam=0.01)
    with pytest.raises(cm.DegenerateQubitError):
        cm.qubit_eigenbasis(c)


def test_coupling_ratio_tracks_mixing_angle():
    c = sample_circuit()
    _, th, _ = cm.qubit_eigenbasis(c)
    g_x, g_z = cm.electromech_couplings(c)
    assert g_x / g_z == pytest.approx(math.tan(th), rel=1e-12)


def test_explicit_angle_matches_eigenbasis_path():
    c = sample_circuit()
    _, th, _ = cm.qubit_eigenbasis(c)
    exact = cm.electromech_couplings(c)
    trig = cm.electromech_couplings(c, th)
    assert exact[0] == pytest.approx(trig[0], rel=1e-12)
    assert exact[1] == pytest.approx(trig[1], rel=1e-12)


def test_drive_matching_cancels_longitudinal_component():
    c = sample_circuit()
    rng = np.random.default_rng(17)
    for theta0 in rng.uniform(0.05, math.pi - 0.05, size=100):
        delta_ej, omega, a_z = cm.drive_matching(c, float(theta0))
        assert abs(a_z) < 1e-12 * abs(omega)
        # matched flux amplitude follows the cotangent rule
        assert delta_ej == pytest.approx(
            8.0 * c.E_C * c.n_d / math.tan(theta0), rel=1e-12
        )


def test_drive_matching_impossible_at_vanishing_transverse_axis():
    c = sample_circuit()
    with pytest.raises(cm.MatchingImpossibleError):
        cm.drive_matching(c, 0.0)


def test_zpf_lambda_requires_mechanical_inputs():
    c = cm.CircuitParams(E_C=TWO_PI * 5e9, E_J=TWO_PI * 10e9)
    with pytest.raises(cm.InsufficientDataError):
        cm.zpf_lambda(c)


def test_zpf_lambda_magnitude():
    # numbers chosen so the zero-point length is ~1e-15 m scale
    c = cm.CircuitParams(
        E_C=TWO_PI * 5e9,
        E_J=TWO_PI * 10e9,
        V_g=2.0,
        dCg_dx=1e-9,
        mass=1e-15,
        omega_m=TWO_PI * 100e6,
    )
    lam = cm.zpf_lambda(c)
    x_zpf = math.sqrt(cm.hbar / (2.0 * c.mass * c.omega_m))
    assert lam == pytest.approx(c.V_g / (2 * cm.elementary_charge) * c.dCg_dx * x_zpf)
    assert lam > 0.0


def test_target_round_trip():
    wq = TWO_PI * 200e6
    gx = TWO_PI * 0.6e6
    gz = TWO_PI * 6e6
    om = TWO_PI * 2 * 4 * 36e3
    c = cm.circuit_for_targets(wq, gx, gz, om, E_C=TWO_PI * 5e9)
    wq2, th, _ = cm.qubit_eigenbasis(c)
    gx2, gz2 = cm.electromech_couplings(c)
    _, om2, a_z = cm.drive_matching(c, th)
    assert wq2 == pytest.approx(wq, rel=1e-12)
    assert abs(gx2) == pytest.approx(gx, rel=1e-12)
    assert abs(gz2) == pytest.approx(gz, rel=1e-12)
    assert om2 == pytest.approx(om, rel=1e-12)
    assert abs(a_z) < 1e-12 * om2


def test_system_params_from_circuit_end_to_end():
    c = cm.circuit_for_targets(
        TWO_PI * 200e6, TWO_PI * 0.6e6, TWO_PI * 6e6, TWO_PI * 0.576e6,
        E_C=TWO_PI * 5e9,
    )
    p = cm.system_params_from_circuit(
        c, omega_m=TWO_PI * 100e6, omega_d=TWO_PI * 200e6,
        kappa=TWO_PI * 100e3, gamma=TWO_PI * 15.0, n_trunc=40,
    )
    assert p.omega_q == pytest.approx(TWO_PI * 200e6, rel=1e-12)
    assert abs(p.g_x) == pytest.approx(TWO_PI * 0.6e6, rel=1e-12)
    assert abs(p.g_z) == pytest.approx(TWO_PI * 6e6, rel=1e-12)
    assert p.n_trunc == 40
    assert p.g_two_phonon == pytest.approx(abs(p.g_x * p.g_z) / p.omega_m, rel=1e-12)


def test_invalid_circuit_inputs_rejected():
    with pytest.raises(ConfigError):
        cm.CircuitParams(E_C=0.0, E_J=1.0)
    with pytest.raises(ConfigError):
        cm.CircuitParams(E_C=1.0, E_J=-1.0)
    with pytest.raises(ConfigError):
        cm.CircuitParams(E_C=1.0, E_J=1.0, lam=-0.5)
