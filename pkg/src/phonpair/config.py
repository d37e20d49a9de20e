"""Run configuration: flat key-value files mapped onto typed settings.

The format is one `section.key = value` assignment per line, with blank
lines and full-line `#` comments ignored. Every key must be in the
registry below (unknown or duplicate keys are rejected with the line
number), values are typed per key, and dimensional frequencies are
given in Hz, converted to angular units exactly once on load.

Keys and defaults:

  system.omega_m_hz     mechanical frequency, Hz           (required)
  system.kappa_hz       qubit energy decay rate, Hz        (required)
  system.omega_q_hz     qubit frequency, Hz                (default 2 * omega_m)
  system.omega_d_hz     drive frequency, Hz                (default omega_q)
  system.g_x_hz         transverse coupling, Hz            (default 0)
  system.g_z_hz         longitudinal coupling, Hz          (default 0)
  system.gamma_hz       mechanical damping, Hz             (default 0)
  system.gamma_phi_hz   extra qubit dephasing, Hz          (default 0)
  system.n_th           thermal bath occupation            (default 0)
  system.n_trunc        Fock-space truncation              (default 60)
  drive.eps_over_g      drive strength as eps / g          (default unset)
  drive.omega_rabi_hz   drive strength as Rabi frequency   (default unset)
  run.frame             lab | mech_rot | double_rot        (default mech_rot)
  run.initial_state     vacuum | fock(n) | coherent(re[,im]) | thermal(nbar)
                                                           (default vacuum)
  run.horizon           final time, dimensionless          (default 39)
  run.horizon_units     kappa_t | gamma2_t                 (default kappa_t)
  run.record_interval   sample spacing in horizon units    (default 0.05)
  run.snapshots         comma list of snapshot times in
                        horizon units                      (default empty)
  run.steady_method     propagate | nullspace              (default propagate)
  wigner.x_min/.x_max/.p_min/.p_max  phase-space window    (default -5..5)
  wigner.n_x/.n_p       grid points per axis               (default 201)
  effective.include_frame_term  keep the residual a^dag a
                        shift in the effective Hamiltonian (default on)
  compare.align_rotation  rotate the effective state by the
                        induced shift before comparing     (default off)
  outputs.timeseries / outputs.wigner / outputs.steady / outputs.report
                        artifact switches                  (see registry)

The drive may be set through either drive key but not both; with
neither, the drive is off. eps_over_g is resolved against
g = g_x g_z / omega_m after the couplings are known.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ConfigError
from .operators import coherent_state, dm, fock_state, thermal_dm
from .params import SystemParams

__all__ = [
    "RunConfig",
    "parse_config",
    "parse_config_text",
    "available_presets",
    "KEY_REGISTRY",
]

_FRAMES = ("lab", "mech_rot", "double_rot")
_HORIZON_UNITS = ("kappa_t", "gamma2_t")
_STEADY_METHODS = ("propagate", "nullspace")
_TRUE_WORDS = {"true", "on", "yes", "1"}
_FALSE_WORDS = {"false", "off", "no", "0"}

# key -> (type tag, default value or None when required/unset, doc)
KEY_REGISTRY: dict[str, tuple[str, object, str]] = {
    "system.omega_m_hz": ("pos_float", None, "mechanical frequency (Hz)"),
    "system.kappa_hz": ("pos_float", None, "qubit energy decay rate (Hz)"),
    "system.omega_q_hz": ("pos_float", "2*omega_m", "qubit frequency (Hz)"),
    "system.omega_d_hz": ("pos_float", "omega_q", "drive frequency (Hz)"),
    "system.g_x_hz": ("nonneg_float", 0.0, "transverse coupling (Hz)"),
    "system.g_z_hz": ("nonneg_float", 0.0, "longitudinal coupling (Hz)"),
    "system.gamma_hz": ("nonneg_float", 0.0, "mechanical damping (Hz)"),
    "system.gamma_phi_hz": ("nonneg_float", 0.0, "qubit dephasing (Hz)"),
    "system.n_th": ("nonneg_float", 0.0, "thermal occupation"),
    "system.n_trunc": ("pos_int", 60, "Fock truncation"),
    "drive.eps_over_g": ("nonneg_float", None, "drive strength eps/g"),
    "drive.omega_rabi_hz": ("nonneg_float", None, "Rabi frequency (Hz)"),
    "run.frame": ("enum:frame", "mech_rot", "full-model frame"),
    "run.initial_state": ("state", "vacuum", "mechanical initial state"),
    "run.horizon": ("pos_float", 39.0, "final time (dimensionless)"),
    "run.horizon_units": ("enum:units", "kappa_t", "horizon clock"),
    "run.record_interval": ("pos_float", 0.05, "sample spacing"),
    "run.snapshots": ("float_list", (), "snapshot times"),
    "run.steady_method": ("enum:steady", "propagate", "steady-state solver"),
    "wigner.x_min": ("float", -5.0, "window lower x"),
    "wigner.x_max": ("float", 5.0, "window upper x"),
    "wigner.p_min": ("float", -5.0, "window lower p"),
    "wigner.p_max": ("float", 5.0, "window upper p"),
    "wigner.n_x": ("pos_int", 201, "grid points along x"),
    "wigner.n_p": ("pos_int", 201, "grid points along p"),
    "effective.include_frame_term": ("bool", True, "keep induced shift"),
    "compare.align_rotation": ("bool", False, "undo induced rotation"),
    "outputs.timeseries": ("bool", True, "emit timeseries table"),
    "outputs.wigner": ("bool", True, "emit snapshot grids"),
    "outputs.steady": ("bool", False, "emit steady-state summary"),
    "outputs.report": ("bool", False, "emit verification report"),
}

_STATE_RE = re.compile(
    r"^(vacuum|fock\((\d+)\)|coherent\(([^,()]+)(?:,([^,()]+))?\)"
    r"|thermal\(([^,()]+)\))$"
)


def _parse_value(key: str, raw: str, where: str):
    tag = KEY_REGISTRY[key][0]
    raw = raw.strip()
    try:
        if tag in ("float", "pos_float", "nonneg_float"):
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError("not finite")
            if tag == "pos_float" and not v > 0.0:
                raise ValueError("must be > 0")
            if tag == "nonneg_float" and v < 0.0:
                raise ValueError("must be >= 0")
            return v
        if tag == "pos_int":
            v = int(raw)
            if v <= 0:
                raise ValueError("must be > 0")
            return v
        if tag == "bool":
            low = raw.lower()
            if low in _TRUE_WORDS:
                return True
            if low in _FALSE_WORDS:
                return False
            raise ValueError("expected true/false")
        if tag == "float_list":
            if not raw:
                return ()
            return tuple(float(p) for p in raw.split(","))
        if tag == "enum:frame":
            if raw not in _FRAMES:
                raise ValueError(f"expected one of {_FRAMES}")
            return raw
        if tag == "enum:units":
            if raw not in _HORIZON_UNITS:
                raise ValueError(f"expected one of {_HORIZON_UNITS}")
            return raw
        if tag == "enum:steady":
            if raw not in _STEADY_METHODS:
                raise ValueError(f"expected one of {_STEADY_METHODS}")
            return raw
        if tag == "state":
            if not _STATE_RE.match(raw.replace(" ", "")):
                raise ValueError(
                    "expected vacuum, fock(n), coherent(re[,im]) "
                    "or thermal(nbar)"
                )
            return raw.replace(" ", "")
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {exc}") from None
    raise ConfigError(f"registry has unknown type tag {tag!r} for {key}")


# --------------------------------------------------------------------------
# resolved configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Typed settings resolved from a config file plus overrides."""

    params: SystemParams
    frame: str
    initial_state: str
    horizon: float
    horizon_units: str
    record_interval: float
    snapshots: tuple[float, ...]
    steady_method: str
    wigner_window: tuple[float, float, float, float]
    wigner_shape: tuple[int, int]
    include_frame_term: bool
    align_rotation: bool
    outputs: tuple[str, ...]

    def initial_state_dm(self) -> np.ndarray:
        """Mechanical density matrix named by run.initial_state."""
        return _build_state(self.initial_state, self.params.n_trunc)

    def time_unit(self, gamma2: float) -> float:
        """Seconds per unit of the configured dimensionless clock."""
        if self.horizon_units == "kappa_t":
            return 1.0 / self.params.kappa
        if gamma2 <= 0.0:
            raise ConfigError(
                "horizon is measured in gamma2_t but the pair-cooling "
                "rate is zero at this parameter point"
            )
        return 1.0 / gamma2


def _build_state(spec: str, n_trunc: int) -> np.ndarray:
    m = _STATE_RE.match(spec)
    if m is None:
        raise ConfigError(f"unparseable initial state {spec!r}")
    if spec == "vacuum":
        return dm(fock_state(n_trunc, 0))
    if m.group(2) is not None:
        n = int(m.group(2))
        if n >= n_trunc:
            raise ConfigError(
                f"initial Fock level {n} needs truncation > {n}, "
                f"have {n_trunc}"
            )
        return dm(fock_state(n_trunc, n))
    if m.group(3) is not None:
        re_part = float(m.group(3))
        im_part = float(m.group(4)) if m.group(4) is not None else 0.0
        return dm(coherent_state(n_trunc, complex(re_part, im_part)))
    return thermal_dm(n_trunc, float(m.group(5)))


def _resolve(values: dict[str, object]) -> RunConfig:
    get = values.get

    omega_m = get("system.omega_m_hz")
    kappa = get("system.kappa_hz")
    missing = [
        k
        for k, v in (("system.omega_m_hz", omega_m), ("system.kappa_hz", kappa))
        if v is None
    ]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    omega_q = get("system.omega_q_hz")
    if omega_q is None:
        omega_q = 2.0 * omega_m
    omega_d = get("system.omega_d_hz")
    if omega_d is None:
        omega_d = omega_q

    g_x = values["system.g_x_hz"]
    g_z = values["system.g_z_hz"]

    eps_over_g = get("drive.eps_over_g")
    omega_rabi = get("drive.omega_rabi_hz")
    if eps_over_g is not None and omega_rabi is not None:
        raise ConfigError(
            "drive.eps_over_g and drive.omega_rabi_hz are mutually "
            "exclusive; set one"
        )
    if omega_rabi is not None:
        omega_rabi_hz = omega_rabi
    elif eps_over_g is not None:
        g_hz = g_x * g_z / omega_m
        if g_hz == 0.0:
            raise ConfigError(
                "drive.eps_over_g needs a nonzero two-phonon vertex; "
                "set g_x and g_z (or give drive.omega_rabi_hz directly)"
            )
        omega_rabi_hz = 2.0 * eps_over_g * g_hz
    else:
        omega_rabi_hz = 0.0

    params = SystemParams.from_hz(
        omega_m=omega_m,
        omega_q=omega_q,
        omega_d=omega_d,
        g_x=g_x,
        g_z=g_z,
        Omega=omega_rabi_hz,
        kappa=kappa,
        gamma=values["system.gamma_hz"],
        gamma_phi=values["system.gamma_phi_hz"],
        n_th=values["system.n_th"],
        n_trunc=values["system.n_trunc"],
    )

    window = (
        values["wigner.x_min"],
        values["wigner.x_max"],
        values["wigner.p_min"],
        values["wigner.p_max"],
    )
    if not (window[0] < window[1] and window[2] < window[3]):
        raise ConfigError(f"wigner window is not ordered: {window}")

    horizon = values["run.horizon"]
    snapshots = values["run.snapshots"]
    bad = [s for s in snapshots if s < 0.0 or s > horizon * (1 + 1e-12)]
    if bad:
        raise ConfigError(
            f"snapshot times {bad} fall outside the horizon {horizon}"
        )

    state = values["run.initial_state"]
    _build_state(state, values["system.n_trunc"])  # fail fast on bad specs

    outputs = tuple(
        name
        for name in ("timeseries", "wigner", "steady", "report")
        if values[f"outputs.{name}"]
    )

    return RunConfig(
        params=params,
        frame=values["run.frame"],
        initial_state=state,
        horizon=horizon,
        horizon_units=values["run.horizon_units"],
        record_interval=values["run.record_interval"],
        snapshots=tuple(float(s) for s in snapshots),
        steady_method=values["run.steady_method"],
        wigner_window=tuple(float(v) for v in window),
        wigner_shape=(values["wigner.n_x"], values["wigner.n_p"]),
        include_frame_term=values["effective.include_frame_term"],
        align_rotation=values["compare.align_rotation"],
        outputs=outputs,
    )


# --------------------------------------------------------------------------
# parsing entry points
# --------------------------------------------------------------------------


def parse_config_text(
    text: str,
    where: str = "<config>",
    overrides: dict[str, str] | None = None,
) -> RunConfig:
    """Parse config text; overrides are key -> raw-value strings applied
    after the file (used by sweeps and command-line overrides)."""
    values: dict[str, object] = {
        key: (None if default in (None, "2*omega_m", "omega_q") else default)
        for key, (_, default, _) in KEY_REGISTRY.items()
    }
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(
                f"{where}:{lineno}: expected 'key = value', got {line!r}"
            )
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in KEY_REGISTRY:
            raise ConfigError(f"{where}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(
                f"{where}:{lineno}: duplicate key {key!r} "
                f"(first set on line {seen[key]})"
            )
        seen[key] = lineno
        values[key] = _parse_value(key, value, f"{where}:{lineno}")
    for key, value in (overrides or {}).items():
        if key not in KEY_REGISTRY:
            raise ConfigError(f"override: unknown key {key!r}")
        values[key] = _parse_value(key, value, "override")
    return _resolve(values)


def available_presets() -> list[str]:
    """Bare names of the bundled configuration presets (what parse_config
    accepts)."""
    pkg = resources.files("phonpair") / "presets"
    try:
        return sorted(
            p.name[: -len(".cfg")] for p in pkg.iterdir() if p.name.endswith(".cfg")
        )
    except (FileNotFoundError, NotADirectoryError):
        return []


def parse_config(
    path: str, overrides: dict[str, str] | None = None
) -> RunConfig:
    """Load a config file, or a bundled preset when the bare name of one
    is given instead of an existing path."""
    if os.path.exists(path):
        with open(path) as fh:
            return parse_config_text(fh.read(), where=path, overrides=overrides)
    base = os.path.basename(path)
    if base == path:  # no directory part: try the bundled presets
        candidate = base if base.endswith(".cfg") else base + ".cfg"
        pkg = resources.files("phonpair") / "presets"
        preset = pkg / candidate
        if preset.is_file():
            return parse_config_text(
                preset.read_text(), where=f"preset:{candidate}",
                overrides=overrides,
            )
        raise ConfigError(
            f"no such config file or preset: {path!r} "
            f"(presets: {', '.join(available_presets())})"
        )
    raise ConfigError(f"config file not found: {path}")
