"""Table emission/parsing round trips and run-configuration parsing."""

import math

import numpy as np
import pytest

from phonpair import config as cfgmod
from phonpair import tables
from phonpair.engine import TrajectoryRecord
from phonpair.errors import ConfigError
from phonpair.observables import WignerGrid

TWO_PI = 2.0 * math.pi


def sample_record():
    times = np.linspace(0.0, 1.0e-3, 7)
    obs = {
        "mean_phonon": np.linspace(0.0, 3.9955272334326493, 7),
        "parity": np.array([1.0, 0.99, 0.98, 0.97, 0.96, 0.951, 0.95]),
        "purity": np.full(7, 1.0 / 3.0),
        "fidelity": np.linspace(1.0, 0.8118, 7),
        "qubit_excitation": np.full(7, 1.2e-17),
    }
    return TrajectoryRecord(
        times=times,
        observables=obs,
        snapshots=[],
        kappa=TWO_PI * 1e5,
        gamma2=TWO_PI * 51.84e3,
        dt=1.0e-9,
        frame="mech_rot",
        backend="compiled",
    )


def test_timeseries_round_trip_is_bit_exact(tmp_path):
    rec = sample_record()
    path = tmp_path / "run_timeseries.csv"
    tables.emit_table(rec, path)
    parsed = tables.parse_table(path)
    assert parsed.names[:6] == [
        "t_seconds", "kappa_t", "gamma2_t", "mean_phonon", "parity", "purity",
    ]
    assert "fidelity" in parsed.names and "qubit_excitation" in parsed.names
    assert np.array_equal(parsed.columns["t_seconds"], rec.times)
    assert np.array_equal(parsed.columns["mean_phonon"], rec.observables["mean_phonon"])
    assert np.array_equal(
        parsed.columns["qubit_excitation"], rec.observables["qubit_excitation"]
    )
    assert np.array_equal(parsed.columns["kappa_t"], rec.times * rec.kappa)
    assert parsed.metadata["frame"] == "mech_rot"
    assert parsed.n_rows == 7


def test_wigner_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(2)
    vals = rng.normal(size=(5, 4)) * np.logspace(-17, 0, 20).reshape(5, 4)
    grid = WignerGrid(
        x_min=-2.0, x_max=2.0, p_min=-1.0, p_max=1.0, n_x=5, n_p=4, values=vals
    )
    path = tmp_path / "state_wigner.csv"
    tables.emit_table(grid, path)
    back = tables.read_wigner(path)
    assert np.array_equal(back.values, grid.values)
    assert back.x_min == grid.x_min and back.n_p == grid.n_p


def test_empty_record_emits_header_only(tmp_path):
    rec = sample_record()
    empty = TrajectoryRecord(
        times=np.empty(0),
        observables={k: np.empty(0) for k in ("mean_phonon", "parity", "purity")},
        snapshots=[],
        kappa=rec.kappa,
        gamma2=rec.gamma2,
        dt=rec.dt,
        frame="lab",
        backend="fallback",
    )
    path = tmp_path / "empty_timeseries.csv"
    tables.emit_table(empty, path)
    parsed = tables.parse_table(path)
    assert parsed.n_rows == 0


def test_atomic_write_leaves_no_temp_files(tmp_path):
    path = tmp_path / "out.csv"
    tables.atomic_write_text(path, "a,b\n1,2\n")
    assert path.read_text() == "a,b\n1,2\n"
    leftovers = [f for f in tmp_path.iterdir() if f.name != "out.csv"]
    assert leftovers == []


def test_parse_errors_carry_line_numbers(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3\n")
    with pytest.raises(ConfigError, match="3"):
        tables.parse_table(bad)
    bad.write_text("a,b\n1,x\n")
    with pytest.raises(ConfigError, match="2"):
        tables.parse_table(bad)


def test_emit_rejects_unknown_payload(tmp_path):
    with pytest.raises(ConfigError):
        tables.emit_table({"not": "a table"}, tmp_path / "x.csv")


# -------------------------------------------------------------------------
# run configuration
# -------------------------------------------------------------------------

MINIMAL = """
system.omega_m_hz = 100e6
system.kappa_hz = 100e3
"""


def test_minimal_config_defaults():
    cfg = cfgmod.parse_config_text(MINIMAL, where="inline")
    p = cfg.params
    assert p.omega_m == pytest.approx(TWO_PI * 100e6)
    # derived defaults: two-phonon resonance and matched drive
    assert p.omega_q == pytest.approx(2.0 * p.omega_m)
    assert p.omega_d == pytest.approx(p.omega_q)
    assert p.n_trunc == 60
    assert cfg.frame == "mech_rot"
    assert cfg.include_frame_term is True


def test_unknown_and_duplicate_keys_rejected_with_line_numbers():
    text = MINIMAL + "system.bogus = 1\n"
    with pytest.raises(ConfigError, match="unknown key"):
        cfgmod.parse_config_text(text, where="inline")
    text = MINIMAL + "system.kappa_hz = 2e5\n"
    with pytest.raises(ConfigError, match="duplicate"):
        cfgmod.parse_config_text(text, where="inline")


def test_missing_required_key_rejected():
    with pytest.raises(ConfigError, match="omega_m_hz"):
        cfgmod.parse_config_text("system.kappa_hz = 1e5\n", where="inline")


def test_initial_state_grammar():
    for spec, check in (
        ("vacuum", lambda r: r[0, 0] == 1.0),
        ("fock(2)", lambda r: r[2, 2] == 1.0),
        ("coherent(1.0)", lambda r: abs(np.trace(r) - 1.0) < 1e-12),
        ("coherent(0.5,-0.25)", lambda r: r[0, 0].real < 1.0),
        ("thermal(0.5)", lambda r: r[1, 1].real < r[0, 0].real),
    ):
        cfg = cfgmod.parse_config_text(
            MINIMAL + f"run.initial_state = {spec}\n", where="inline"
        )
        rho = cfg.initial_state_dm()
        assert abs(np.trace(rho) - 1.0) < 1e-9, spec
        assert check(rho), spec
    with pytest.raises(ConfigError):
        cfgmod.parse_config_text(
            MINIMAL + "run.initial_state = squeezed(1)\n", where="inline"
        )


def test_drive_specifications_are_exclusive():
    both = MINIMAL + "drive.eps_over_g = 2\ndrive.omega_rabi_hz = 1e5\n"
    with pytest.raises(ConfigError, match="exclusive|both"):
        cfgmod.parse_config_text(both, where="inline")
    # ratio drive requires a nonzero pair coupling
    no_g = MINIMAL + "drive.eps_over_g = 2\n"
    with pytest.raises(ConfigError):
        cfgmod.parse_config_text(no_g, where="inline")


def test_ratio_drive_sets_rabi_amplitude():
    text = MINIMAL + "system.g_x_hz = 0.6e6\nsystem.g_z_hz = 6e6\ndrive.eps_over_g = 4\n"
    cfg = cfgmod.parse_config_text(text, where="inline")
    g = cfg.params.g_two_phonon
    assert cfg.params.eps == pytest.approx(4.0 * g, rel=1e-12)


def test_time_unit_requires_matching_rate():
    text = MINIMAL + "run.horizon = 5\nrun.horizon_units = gamma2_t\n"
    cfg = cfgmod.parse_config_text(text, where="inline")
    with pytest.raises(ConfigError, match="gamma2|rate"):
        cfg.time_unit(0.0)
    assert cfg.time_unit(2.0) == pytest.approx(0.5)


def test_overrides_validated_like_file_keys():
    cfg = cfgmod.parse_config_text(
        MINIMAL, where="inline", overrides={"system.n_trunc": "25"}
    )
    assert cfg.params.n_trunc == 25
    with pytest.raises(ConfigError):
        cfgmod.parse_config_text(
            MINIMAL, where="inline", overrides={"system.n_trunc": "-3"}
        )


def test_bundled_presets_resolve_by_bare_name():
    names = cfgmod.available_presets()
    assert "cat_stabilization" in names
    assert "full_vs_effective" in names
    assert "full_vs_effective_ci" in names
    cfg = cfgmod.parse_config("cat_stabilization")
    assert cfg.params.n_trunc == 60
    assert cfg.params.eps / cfg.params.g_two_phonon == pytest.approx(4.0)
    ci = cfgmod.parse_config("full_vs_effective_ci")
    assert ci.params.n_trunc == 20
    assert ci.frame == "mech_rot"
    # ratio preservation between desk and ci scale
    desk = cfgmod.parse_config("full_vs_effective")
    for attr in ("g_x", "g_z", "kappa"):
        r_desk = getattr(desk.params, attr) / desk.params.omega_m
        r_ci = getattr(ci.params, attr) / ci.params.omega_m
        assert r_desk == pytest.approx(r_ci, rel=1e-12), attr


def test_missing_config_file_lists_presets():
    with pytest.raises(ConfigError, match="cat_stabilization"):
        cfgmod.parse_config("no_such_setup")
