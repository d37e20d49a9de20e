"""Command-line harness: rates, evolve, compare, steady, verify, sweep.

Every command reads a flat key-value config (see config.py for the key
registry) and writes plain-text tables through atomic renames, so
identical configs produce bit-identical artifacts and concurrent sweeps
never interleave partial files. Frequencies and rates are reported in
two columns whose ratio is exactly 2 pi: the Hz column is the angular
value divided by 2 pi once, and the angular column is that Hz value
multiplied back, so the pair is self-consistent at double precision.

Exit codes: 0 success, 1 configuration problem, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import effective_model, full_model, kernel_oracle
from .config import RunConfig, available_presets, parse_config
from .errors import (
    ConfigError,
    NumericalError,
    PhonpairError,
    VerificationError,
)
from .observables import (
    negativity_volume,
    parity_expectation,
    mean_phonon,
    purity,
    uhlmann_fidelity,
    wigner,
)
from .operators import (
    dm,
    fock_state,
    partial_trace_qubit,
    with_qubit_ground,
)
from .params import SystemParams
from .tables import atomic_write_text, emit_table

TWO_PI = 2.0 * math.pi

# default parameter point for `verify` when no config is given: the
# flagship stabilization point (all frequencies in Hz)
_VERIFY_DEFAULTS = dict(
    omega_m=100e6,
    omega_q=200e6,
    omega_d=200e6,
    g_x=0.6e6,
    g_z=6e6,
    Omega=2.0 * 4.0 * (0.6e6 * 6e6 / 100e6),
    kappa=100e3,
    gamma=15.0,
    n_trunc=20,
)


def _hz_pair(value):
    """(hz, rad_s) columns with the ratio exactly 2 pi in float math."""
    hz = value / TWO_PI
    return hz, hz * TWO_PI


def _fmt_val(v) -> str:
    if isinstance(v, complex):
        if v.imag == 0.0:
            return format(v.real, ".17g")
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return format(float(v), ".17g")


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _snap_label(value: float) -> str:
    return format(value, "g")


# --------------------------------------------------------------------------
# rates
# --------------------------------------------------------------------------


def cmd_rates(args) -> int:
    cfg = parse_config(args.config)
    eff = effective_model.effective_params(cfg.params)
    lines = [
        "# kind = rates",
        f"# n_trunc = {cfg.params.n_trunc}",
        "symbol,value_hz,value_rad_s,role",
    ]
    screen = []
    for symbol, value, role in eff.rows():
        hz, rad = _hz_pair(value)
        lines.append(f"{symbol},{_fmt_val(hz)},{_fmt_val(rad)},{role}")
        mag = abs(value) / TWO_PI
        screen.append(f"  {symbol:14s} {mag:16.6e} Hz-equiv  {role}")
    path = _out_path(args, "rates.csv")
    atomic_write_text(path, "\n".join(lines) + "\n")
    print("effective-model coefficients (magnitudes shown; table has")
    print("signed/complex values in Hz and rad/s):")
    print("\n".join(screen))
    print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# evolve
# --------------------------------------------------------------------------


def _run_model(cfg: RunConfig, model: str):
    """Propagate the configured run; returns (record, mech snapshot list)."""
    eff = effective_model.effective_params(cfg.params)
    unit = cfg.time_unit(eff.Gamma2_minus)
    t_final = cfg.horizon * unit
    interval = cfg.record_interval * unit
    snap_seconds = tuple(s * unit for s in cfg.snapshots)
    rho_m = cfg.initial_state_dm()

    if model == "effective":
        record = effective_model.propagate_effective(
            eff,
            cfg.params,
            rho_m,
            t_final,
            record_interval=interval,
            include_frame_term=cfg.include_frame_term,
            snapshot_times=snap_seconds,
        )
        mech_snaps = [(t, rho) for t, rho in record.snapshots]
    elif model == "full":
        record = full_model.propagate_full(
            cfg.params,
            rho0=with_qubit_ground(rho_m),
            t_final=t_final,
            frame=cfg.frame,
            record_interval=interval,
            snapshot_times=snap_seconds,
        )
        n = cfg.params.n_trunc
        mech_snaps = [
            (t, partial_trace_qubit(rho, n)) for t, rho in record.snapshots
        ]
    else:
        raise ConfigError(f"unknown model {model!r}")
    return record, mech_snaps


def _emit_frames(cfg: RunConfig, args, mech_snaps, prefix: str, unit: float):
    written = []
    for t, rho_m in mech_snaps:
        # label by the actual (snapped) sample time on the configured clock
        label = _snap_label(t / unit)
        x_min, x_max, p_min, p_max = cfg.wigner_window
        n_x, n_p = cfg.wigner_shape
        grid = wigner(
            rho_m,
            x_min=x_min,
            x_max=x_max,
            p_min=p_min,
            p_max=p_max,
            n_x=n_x,
            n_p=n_p,
        )
        path = _out_path(args, f"{prefix}_wigner_{label}.csv")
        emit_table(grid, path)
        written.append(path)
    return written


def cmd_evolve(args) -> int:
    cfg = parse_config(args.config)
    record, mech_snaps = _run_model(cfg, args.model)
    eff = effective_model.effective_params(cfg.params)
    unit = cfg.time_unit(eff.Gamma2_minus)

    written = []
    if "timeseries" in cfg.outputs:
        path = _out_path(args, f"evolve_{args.model}_timeseries.csv")
        emit_table(record, path)
        written.append(path)
    if "wigner" in cfg.outputs:
        written += _emit_frames(
            cfg, args, mech_snaps, f"evolve_{args.model}", unit
        )

    n_final = record.observables["mean_phonon"][-1]
    p_final = record.observables["parity"][-1]
    print(
        f"{args.model} model, {record.times.size} samples to "
        f"{cfg.horizon:g} {cfg.horizon_units}: final <n> = {n_final:.6f}, "
        f"parity = {p_final:.6f}, purity = "
        f"{record.observables['purity'][-1]:.6f}"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# compare
# --------------------------------------------------------------------------


def _alignment_phases(n_trunc: int, shift: float, t: float) -> np.ndarray:
    phases = np.exp(1j * shift * t * np.arange(n_trunc))
    return phases


def run_comparison(cfg: RunConfig):
    """Full (mech_rot-style frames) against effective from one state.

    Returns (full record with fidelity series attached, effective
    record, matched mechanical snapshot pairs). The full model starts in
    the qubit ground state tensor the configured mechanical state.
    """
    eff = effective_model.effective_params(cfg.params)
    unit = cfg.time_unit(eff.Gamma2_minus)
    t_final = cfg.horizon * unit
    interval = cfg.record_interval * unit
    snap_seconds = tuple(s * unit for s in cfg.snapshots)
    rho_m = cfg.initial_state_dm()
    n = cfg.params.n_trunc
    shift = eff.delta1 + eff.delta2

    eff_states: list[np.ndarray] = []

    def stash(t: float, rho: np.ndarray):
        eff_states.append(rho.copy())
        return {}

    eff_record = effective_model.propagate_effective(
        eff,
        cfg.params,
        rho_m,
        t_final,
        record_interval=interval,
        include_frame_term=cfg.include_frame_term,
        snapshot_times=snap_seconds,
        extra_record=stash,
    )

    counter = {"i": 0}

    def fid(t: float, rho: np.ndarray):
        i = counter["i"]
        counter["i"] = i + 1
        target = eff_states[i]
        if cfg.align_rotation:
            ph = _alignment_phases(n, shift, t)
            target = (ph[:, None] * target) * ph.conj()[None, :]
        val = uhlmann_fidelity(partial_trace_qubit(rho, n), target)
        return {"fidelity": val}

    full_record = full_model.propagate_full(
        cfg.params,
        rho0=with_qubit_ground(rho_m),
        t_final=t_final,
        frame=cfg.frame,
        record_interval=interval,
        snapshot_times=snap_seconds,
        extra_record=fid,
    )
    if full_record.times.size != eff_record.times.size:
        raise ConfigError(
            "comparison grids diverged: "
            f"{full_record.times.size} full samples vs "
            f"{eff_record.times.size} effective"
        )
    pairs = [
        (tf, partial_trace_qubit(rf, n), re)
        for (tf, rf), (_, re) in zip(
            full_record.snapshots, eff_record.snapshots
        )
    ]
    return full_record, eff_record, pairs


def cmd_compare(args) -> int:
    cfg = parse_config(args.config)
    full_record, eff_record, pairs = run_comparison(cfg)
    eff = effective_model.effective_params(cfg.params)
    unit = cfg.time_unit(eff.Gamma2_minus)

    written = []
    if "timeseries" in cfg.outputs:
        pf = _out_path(args, "compare_full_timeseries.csv")
        emit_table(full_record, pf)
        pe = _out_path(args, "compare_effective_timeseries.csv")
        emit_table(eff_record, pe)
        written += [pf, pe]
    if "wigner" in cfg.outputs:
        full_snaps = [(t, r) for t, r, _ in pairs]
        eff_snaps = [(t, r) for t, _, r in pairs]
        written += _emit_frames(cfg, args, full_snaps, "compare_full", unit)
        written += _emit_frames(
            cfg, args, eff_snaps, "compare_effective", unit
        )

    fid = full_record.observables["fidelity"]
    kt = full_record.kappa_t
    late = fid[kt >= 15.0] if np.any(kt >= 15.0) else fid
    n_full = full_record.observables["mean_phonon"]
    n_eff = eff_record.observables["mean_phonon"]
    window = (kt >= 5.0) & (n_eff > 1e-12)
    dev = (
        float(np.max(np.abs(n_full[window] / n_eff[window] - 1.0)))
        if np.any(window)
        else 0.0
    )
    print(
        f"compared {fid.size} samples to kappa t = {kt[-1]:.2f}: "
        f"final fidelity {fid[-1]:.4f}, min late fidelity "
        f"{float(np.min(late)):.4f}, max <n> deviation {dev:.2%}"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# steady
# --------------------------------------------------------------------------


def cmd_steady(args) -> int:
    cfg = parse_config(args.config)
    eff = effective_model.effective_params(cfg.params)
    rho, info = effective_model.steady_state(
        eff,
        cfg.params,
        rho0=cfg.initial_state_dm(),
        method=cfg.steady_method,
        include_frame_term=cfg.include_frame_term,
    )
    x_min, x_max, p_min, p_max = cfg.wigner_window
    n_x, n_p = cfg.wigner_shape
    grid = wigner(
        rho, x_min=x_min, x_max=x_max, p_min=p_min, p_max=p_max,
        n_x=n_x, n_p=n_p,
    )
    rows = [
        ("mean_phonon", mean_phonon(rho)),
        ("parity", parity_expectation(rho)),
        ("purity", purity(rho)),
        ("negativity_volume", negativity_volume(grid)),
        ("residual_rel", info.get("residual_rel", float("nan"))),
    ]
    lines = ["# kind = steady", f"# method = {cfg.steady_method}",
             "quantity,value"]
    lines += [f"{k},{_fmt_val(v)}" for k, v in rows]
    path = _out_path(args, "steady.csv")
    atomic_write_text(path, "\n".join(lines) + "\n")
    written = [path]
    if "wigner" in cfg.outputs:
        wpath = _out_path(args, "steady_wigner.csv")
        emit_table(grid, wpath)
        written.append(wpath)
    for k, v in rows:
        print(f"  {k:20s} {v:.9g}")
    for path in written:
        print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------


def _battery_lines(params: SystemParams) -> tuple[list[str], list[str]]:
    """Quick invariant battery; returns (lines, failure names)."""
    from .observables import wigner_direct

    lines: list[str] = ["invariant battery:"]
    failures: list[str] = []

    def check(name: str, resid: float, tol: float) -> None:
        ok = resid < tol
        lines.append(
            f"  {name:38s} residual {resid:10.3e}  tol {tol:.0e}  "
            f"{'PASS' if ok else 'FAIL'}"
        )
        if not ok:
            failures.append(name)

    vac = dm(fock_state(24, 0))
    one = dm(fock_state(24, 1))
    w0 = wigner(vac, x_min=0.0, x_max=1.0, p_min=0.0, p_max=1.0,
                n_x=2, n_p=2, check_window=False).values[0, 0]
    w1 = wigner(one, x_min=0.0, x_max=1.0, p_min=0.0, p_max=1.0,
                n_x=2, n_p=2, check_window=False).values[0, 0]
    check("wigner vacuum anchor 1/pi", abs(w0 * math.pi - 1.0), 1e-9)
    check("wigner single-quantum anchor -1/pi", abs(w1 * math.pi + 1.0), 1e-9)
    direct = wigner_direct(vac, [(0.0, 0.0)])[0]
    direct1 = wigner_direct(one, [(0.0, 0.0)])[0]
    check("defining-integral cross-check |0>", abs(direct * math.pi - 1.0),
          1e-9)
    check("defining-integral cross-check |1>", abs(direct1 * math.pi + 1.0),
          1e-9)
    check("wigner normalization (default window)",
          abs(wigner(vac).riemann_norm() - 1.0), 5e-3)

    from .operators import coherent_state

    rho = dm(coherent_state(24, 1.0))
    check("fidelity self-identity", abs(uhlmann_fidelity(rho, rho) - 1.0),
          1e-10)
    check("fidelity orthogonal states", uhlmann_fidelity(vac, one), 1e-12)

    # parity protection: pair processes only, vacuum start
    clean = params.with_(gamma=0.0, n_th=0.0, n_trunc=min(params.n_trunc, 20))
    eff = effective_model.effective_params(clean)
    if eff.Gamma2_minus > 0.0:
        import dataclasses

        eff0 = dataclasses.replace(
            eff, Gamma1_minus=0.0, Gamma1_plus=0.0
        )
        record = effective_model.propagate_effective(
            eff0,
            clean,
            dm(fock_state(clean.n_trunc, 0)),
            0.5 / eff.Gamma2_minus,
            record_every=50,
        )
        par = record.observables["parity"]
        check("parity protection (pair terms only)",
              float(np.max(np.abs(par - 1.0))), 1e-8)
        lines.append(
            "  trace/Hermiticity/positivity enforced at every sample of "
            "that run: PASS"
        )
    else:
        lines.append("  parity protection skipped: pair rate is zero here")
    return lines, failures


def run_verification(
    params: SystemParams,
    probe_dim: int = 12,
    perturb_gamma2_rel: float = 0.0,
) -> tuple[str, bool, tuple[str, ...]]:
    """Oracle suite + scaling and invariant sections; never raises on
    check failure (failures land in the report and the returned tuple)."""
    text, passed, failures = kernel_oracle.verification_report(
        params, probe_dim=probe_dim, perturb_gamma2_rel=perturb_gamma2_rel
    )
    all_failures = list(failures)
    lines = [text, ""]

    sw_params = params.with_(n_trunc=15)
    r_full = full_model.sw_residual(sw_params)
    r_half = full_model.sw_residual(sw_params.with_(g_z=params.g_z / 2.0))
    ratio = r_full / r_half if r_half > 0 else float("inf")
    sw_ok = 3.2 <= ratio <= 4.8
    lines.append(
        f"polaron-residual scaling: ratio {ratio:.3f} on halving g_z "
        f"(want 4 +- 20%)  {'PASS' if sw_ok else 'FAIL'}"
    )
    if not sw_ok:
        all_failures.append("sw_scaling")
    lines.append("")

    battery, bat_failures = _battery_lines(params)
    lines += battery
    all_failures += bat_failures

    ok = passed and not all_failures
    lines.append("")
    lines.append(f"verification overall: {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines), ok, tuple(all_failures)


def cmd_verify(args) -> int:
    if args.config is not None:
        cfg = parse_config(args.config)
        params = cfg.params
    else:
        params = SystemParams.from_hz(**_VERIFY_DEFAULTS)
    text, ok, failures = run_verification(
        params, perturb_gamma2_rel=args.perturb_gamma2_rel
    )
    print(text)
    path = _out_path(args, "verify_report.txt")
    atomic_write_text(path, text + "\n")
    print(f"wrote {path}")
    return 0 if ok else 3


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------


def _as_float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        return float("nan")


def _sweep_point(args, raw_value: str):
    """(row values, status) for one swept point; never raises."""
    nan = float("nan")
    try:
        cfg = parse_config(args.config, overrides={args.key: raw_value})
        eff = effective_model.effective_params(cfg.params)
        rho, _info = effective_model.steady_state(
            eff,
            cfg.params,
            rho0=cfg.initial_state_dm(),
            method=cfg.steady_method,
            include_frame_term=cfg.include_frame_term,
        )
        x_min, x_max, p_min, p_max = cfg.wigner_window
        n_x, n_p = cfg.wigner_shape
        grid = wigner(
            rho, x_min=x_min, x_max=x_max, p_min=p_min, p_max=p_max,
            n_x=n_x, n_p=n_p,
        )
        g2_hz, g2_rad = _hz_pair(eff.Gamma2_minus)
        chi_hz, chi_rad = _hz_pair(abs(eff.chi))
        return (
            [
                _as_float(raw_value),
                g2_hz,
                g2_rad,
                chi_hz,
                chi_rad,
                mean_phonon(rho),
                parity_expectation(rho),
                negativity_volume(grid),
            ],
            0,
        )
    except ConfigError:
        code = 1
    except NumericalError:
        code = 2
    except VerificationError:
        code = 3
    except PhonpairError:
        code = 2
    return [_as_float(raw_value)] + [nan] * 7, code


def cmd_sweep(args) -> int:
    raw_values = [v for chunk in args.values for v in chunk.split(",") if v]
    if not raw_values:
        raise ConfigError("sweep needs at least one value")
    # validate the base config and the key once before spawning workers
    parse_config(args.config, overrides={args.key: raw_values[0]})

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(
            pool.map(lambda v: _sweep_point(args, v), raw_values)
        )

    lines = [
        "# kind = sweep",
        f"# key = {args.key}",
        "value,gamma2_minus_hz,gamma2_minus_rad_s,abs_chi_hz,"
        "abs_chi_rad_s,mean_phonon,parity,negativity_volume,status",
    ]
    n_failed = 0
    for row, code in results:
        lines.append(
            ",".join(format(v, ".17g") for v in row) + f",{code}"
        )
        n_failed += 1 if code != 0 else 0
    path = _out_path(args, "sweep.csv")
    atomic_write_text(path, "\n".join(lines) + "\n")
    print(
        f"swept {args.key} over {len(raw_values)} points "
        f"({n_failed} failed); wrote {path}"
    )
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonpair",
        description=(
            "Driven qubit-resonator simulations: full and eliminated "
            "models, induced-rate tables, and verification reports."
        ),
    )
    parser.add_argument(
        "--config",
        default=None,
        help=(
            "config file path, or the name of a bundled preset "
            f"({', '.join(available_presets())})"
        ),
    )
    parser.add_argument(
        "--out", default=".", help="directory for emitted tables"
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=4,
        help="worker threads for sweep points (other commands run serially)",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="reserved for future stochastic features; the deterministic "
        "core ignores it",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("rates", help="emit the effective-coefficient table")
    p_evolve = sub.add_parser("evolve", help="propagate one model")
    p_evolve.add_argument(
        "--model", choices=("full", "effective"), required=True
    )
    sub.add_parser(
        "compare", help="run both models and the fidelity benchmark"
    )
    sub.add_parser("steady", help="stationary state of the effective model")
    p_verify = sub.add_parser(
        "verify", help="term-enumeration oracle suite and invariant battery"
    )
    p_verify.add_argument(
        "--perturb-gamma2-rel",
        type=float,
        default=0.0,
        dest="perturb_gamma2_rel",
        help="test hook: multiply the closed-form pair-cooling rate by "
        "(1 + this) before the oracle comparison",
    )
    p_sweep = sub.add_parser("sweep", help="map rates/steady state over a key")
    p_sweep.add_argument("--key", required=True, help="config key to sweep")
    p_sweep.add_argument(
        "--values", required=True, nargs="+",
        help="values (space or comma separated)",
    )
    return parser


_NEEDS_CONFIG = {"rates", "evolve", "compare", "steady", "sweep"}

_HANDLERS = {
    "rates": cmd_rates,
    "evolve": cmd_evolve,
    "compare": cmd_compare,
    "steady": cmd_steady,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in _NEEDS_CONFIG and args.config is None:
            raise ConfigError(
                f"the {args.command} command needs --config "
                "(a path or a bundled preset name)"
            )
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
