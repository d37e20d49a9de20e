"""Plain-text table serialization for trajectory and phase-space data.

Everything is comma-separated text with `#` metadata lines up front, one
`key = value` pair per line, so the files diff cleanly and any plotting
tool can ingest them. Floats carry 17 significant digits, which is
enough to reproduce an IEEE double bit for bit on parse. Writes go
through a temporary file in the destination directory followed by an
atomic rename, so a concurrent reader never sees a half-written table.

Two layouts exist:

  timeseries  header t_seconds,kappa_t,gamma2_t,mean_phonon,parity,
              purity plus optional trailing columns (fidelity first,
              then qubit_excitation, then anything else the run
              recorded, alphabetically)
  wigner      header x,p,w in row-major order (x outer, p inner), with
              the grid geometry in the metadata lines
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .engine import TrajectoryRecord
from .errors import ConfigError, ShapeError
from .observables import WignerGrid

__all__ = [
    "emit_table",
    "parse_table",
    "read_wigner",
    "ParsedTable",
    "atomic_write_text",
]

# canonical timeseries columns, in order; extras follow
_CORE_SERIES = ("mean_phonon", "parity", "purity")
_KNOWN_EXTRAS = ("fidelity", "qubit_excitation")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(
        dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# --------------------------------------------------------------------------
# emitters
# --------------------------------------------------------------------------


def _series_columns(record: TrajectoryRecord) -> list[str]:
    names = list(_CORE_SERIES)
    for name in _CORE_SERIES:
        if name not in record.observables:
            raise ShapeError(
                f"trajectory record is missing the {name!r} series; "
                f"has {sorted(record.observables)}"
            )
    extras = [n for n in _KNOWN_EXTRAS if n in record.observables]
    rest = sorted(
        n
        for n in record.observables
        if n not in _CORE_SERIES and n not in _KNOWN_EXTRAS
    )
    return names + extras + rest


def _emit_timeseries(record: TrajectoryRecord, path: str) -> None:
    cols = _series_columns(record)
    n = record.times.size
    for name in cols:
        if record.observables[name].size != n:
            raise ShapeError(
                f"series {name!r} has {record.observables[name].size} "
                f"samples but the time axis has {n}"
            )
    lines = [
        "# kind = timeseries",
        f"# kappa = {_fmt(record.kappa)}",
        f"# gamma2 = {_fmt(record.gamma2)}",
        f"# dt = {_fmt(record.dt)}",
        f"# frame = {record.frame or 'none'}",
        f"# backend = {record.backend}",
        "t_seconds,kappa_t,gamma2_t," + ",".join(cols),
    ]
    kt = record.kappa_t
    gt = record.gamma2_t
    series = [record.observables[name] for name in cols]
    for i in range(n):
        row = [_fmt(record.times[i]), _fmt(kt[i]), _fmt(gt[i])]
        row.extend(_fmt(s[i]) for s in series)
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _emit_wigner(grid: WignerGrid, path: str) -> None:
    lines = [
        "# kind = wigner",
        f"# x_min = {_fmt(grid.x_min)}",
        f"# x_max = {_fmt(grid.x_max)}",
        f"# p_min = {_fmt(grid.p_min)}",
        f"# p_max = {_fmt(grid.p_max)}",
        f"# n_x = {grid.n_x}",
        f"# n_p = {grid.n_p}",
        "x,p,w",
    ]
    xs = grid.x
    ps = grid.p
    vals = grid.values
    for i in range(grid.n_x):
        xi = _fmt(xs[i])
        row_vals = vals[i]
        for j in range(grid.n_p):
            lines.append(f"{xi},{_fmt(ps[j])},{_fmt(row_vals[j])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def emit_table(obj, path: str) -> None:
    """Serialize a TrajectoryRecord or WignerGrid to a text table."""
    if isinstance(obj, TrajectoryRecord):
        _emit_timeseries(obj, path)
    elif isinstance(obj, WignerGrid):
        _emit_wigner(obj, path)
    else:
        raise ConfigError(
            f"emit_table handles TrajectoryRecord and WignerGrid, got "
            f"{type(obj).__name__}"
        )


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


@dataclass
class ParsedTable:
    """Columns and metadata read back from an emitted table."""

    metadata: dict[str, str] = field(default_factory=dict)
    names: list[str] = field(default_factory=list)
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return 0 if not self.names else self.columns[self.names[0]].size


def parse_table(path: str) -> ParsedTable:
    """Read a table written by emit_table.

    Metadata lines `# key = value` populate the metadata dict verbatim
    (values stay strings); the first non-comment line is the header and
    every following line one numeric row.
    """
    metadata: dict[str, str] = {}
    names: list[str] | None = None
    rows: list[list[float]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    metadata[key.strip()] = value.strip()
                continue
            if names is None:
                names = [c.strip() for c in line.split(",")]
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                raise ConfigError(
                    f"{path}:{lineno}: expected {len(names)} fields, "
                    f"got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ConfigError(
                    f"{path}:{lineno}: non-numeric entry ({exc})"
                ) from None
    if names is None:
        raise ConfigError(f"{path}: no header line found")
    data = (
        np.array(rows, dtype=float)
        if rows
        else np.empty((0, len(names)), dtype=float)
    )
    columns = {name: data[:, k].copy() for k, name in enumerate(names)}
    return ParsedTable(metadata=metadata, names=names, columns=columns)


def read_wigner(path: str) -> WignerGrid:
    """Reconstruct a WignerGrid from its emitted table."""
    table = parse_table(path)
    if table.metadata.get("kind") != "wigner":
        raise ConfigError(
            f"{path}: not a wigner table "
            f"(kind = {table.metadata.get('kind')!r})"
        )
    try:
        n_x = int(table.metadata["n_x"])
        n_p = int(table.metadata["n_p"])
        bounds = {
            k: float(table.metadata[k])
            for k in ("x_min", "x_max", "p_min", "p_max")
        }
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: bad or missing grid metadata ({exc})")
    if table.n_rows != n_x * n_p:
        raise ConfigError(
            f"{path}: {table.n_rows} rows do not fill a "
            f"{n_x} x {n_p} grid"
        )
    values = table.columns["w"].reshape(n_x, n_p)
    return WignerGrid(n_x=n_x, n_p=n_p, values=values, **bounds)
