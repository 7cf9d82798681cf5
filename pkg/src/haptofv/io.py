"""Run configuration and snapshot / diagnostics files."""
from __future__ import annotations

import csv
import dataclasses
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .diagnostics import DiagnosticsRecord
from .grid import Grid
from .integrate import TimeStepConfig
from .model import ModelParams, State, TaxisVariant

FIELDS = ("m", "p", "v", "c")
FORMATS = ("csv_grid", "vtk_legacy")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    nx: int = 200
    ny: int = 200
    dt: float = 0.01
    t_end: float = 1000.0
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    linear_tol: float = 1e-12
    alpha: float = 0.01
    beta: float = 0.2
    kappa_m: float = 0.1
    kappa_v: float = 0.1
    mu_p: float = 0.3
    mu_v: float = 0.021
    eta: float = 1.75
    lam: float = 0.1
    eps1: float = 0.0
    taxis_variant: str = "continuous"
    seed: int = 0
    snapshot_interval: float = 200.0
    diagnostics_interval: float = 1.0
    output_dir: str = "out"
    output_format: str = "csv_grid"
    emit_heatmaps: bool = False

    def __post_init__(self) -> None:
        # building the parts runs their validation
        self.model_params()
        self.time_config()
        for name in ("nx", "ny"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be >= 2, got {getattr(self, name)}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.snapshot_interval >= self.dt:
            raise ConfigError(f"snapshot_interval must be >= dt, got {self.snapshot_interval}")
        if not self.diagnostics_interval >= self.dt:
            raise ConfigError(f"diagnostics_interval must be >= dt, got {self.diagnostics_interval}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"output_format must be one of {FORMATS}, got {self.output_format!r}")

    def model_params(self) -> ModelParams:
        try:
            return ModelParams(self.alpha, self.beta, self.kappa_m, self.kappa_v, self.mu_p,
                               self.mu_v, self.eta, self.lam, self.eps1,
                               TaxisVariant(self.taxis_variant))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def time_config(self) -> TimeStepConfig:
        try:
            return TimeStepConfig(self.dt, self.t_end, self.newton_tol, self.newton_max_iter,
                                  self.linear_tol)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def steps_per(self, interval: float) -> int:
        return max(1, round(interval / self.dt))


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: Any) -> Any:
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    if not isinstance(raw, str):
        return raw
    try:
        if kind == "int":
            try:
                return int(raw, 0)
            except ValueError:
                return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None
    return raw.strip()


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def load_config_file(path) -> dict[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def build_config(*layers: Mapping[str, Any]) -> RunConfig:
    """Merge layers left to right (later wins) over the defaults."""
    merged: dict[str, Any] = {}
    for layer in layers:
        for key, value in layer.items():
            if value is not None:
                merged[key] = _coerce(key, value)
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def format_value(x: float) -> str:
    return "%.17g" % x


def snapshot_stem(step: int, field: str) -> str:
    return f"snap_{step:08d}_{field}"


def _field_arrays(state: State) -> dict[str, np.ndarray]:
    return {"m": state.m, "p": state.p, "v": state.v, "c": state.m + state.p}


def write_snapshot(state: State, grid: Grid, time: float, cfg: RunConfig, step: int = 0) -> list[Path]:
    """Write one snapshot in ``cfg.output_format``; returns the written paths."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    arrays = _field_arrays(state)
    paths = []
    if cfg.output_format == "csv_grid":
        for name, values in arrays.items():
            path = out / f"{snapshot_stem(step, name)}.csv"
            write_csv_grid(path, name, values, grid, time)
            paths.append(path)
    else:
        path = out / f"snap_{step:08d}.vtk"
        write_vtk_legacy(path, arrays, grid, time)
        paths.append(path)
    if cfg.emit_heatmaps:
        for name, values in arrays.items():
            paths.extend(write_heatmap(out / f"{snapshot_stem(step, name)}.pgm", name, values, grid))
    return paths


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_csv_grid(path: Path, name: str, values: np.ndarray, grid: Grid, time: float) -> None:
    rows = grid.to_2d(values)
    lines = [f"# field={name} t={float(time)!r} nx={grid.nx} ny={grid.ny}"]
    lines += [",".join(format_value(x) for x in row) for row in rows]
    _write_text(Path(path), "\n".join(lines) + "\n")


_HEADER_RE = re.compile(r"#\s*field=(\S+)\s+t=(\S+)\s+nx=(\d+)\s+ny=(\d+)")


def read_csv_grid(path) -> tuple[str, float, np.ndarray]:
    """Returns ``(field, time, values)`` with values in linear cell order."""
    with open(path) as fh:
        header = fh.readline()
        match = _HEADER_RE.match(header)
        if not match:
            raise ValueError(f"{path}: bad snapshot header {header!r}")
        name, t, nx, ny = match.group(1), float(match.group(2)), int(match.group(3)), int(match.group(4))
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    values = np.array(rows, dtype=float)
    if values.shape != (ny, nx):
        raise ValueError(f"{path}: expected {ny}x{nx} values, found {values.shape}")
    return name, t, values.ravel()


def write_vtk_legacy(path: Path, arrays: Mapping[str, np.ndarray], grid: Grid, time: float) -> None:
    lines = [
        "# vtk DataFile Version 3.0",
        f"haptofv snapshot t={float(time)!r}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {grid.nx + 1} {grid.ny + 1} 1",
        "ORIGIN 0 0 0",
        f"SPACING {grid.hx!r} {grid.hy!r} 1",
        f"CELL_DATA {grid.n_cells}",
    ]
    for name, values in arrays.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [format_value(x) for x in np.asarray(values, dtype=float)]
    _write_text(Path(path), "\n".join(lines) + "\n")


def write_heatmap(path: Path, name: str, values: np.ndarray, grid: Grid) -> list[Path]:
    """8-bit binary PGM, min -> 0 and max -> 255, top row = largest y; plus a sidecar."""
    a = grid.to_2d(np.asarray(values, dtype=float))[::-1]
    lo, hi = float(a.min()), float(a.max())
    if hi > lo:
        img = np.rint((a - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        img = np.zeros(a.shape, dtype=np.uint8)
    path = Path(path)
    try:
        path.write_bytes(f"P5\n{grid.nx} {grid.ny}\n255\n".encode() + img.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    side = path.with_name(path.name + ".txt")
    _write_text(side, f"field={name}\nmin={format_value(lo)}\nmax={format_value(hi)}\n"
                      f"scaling=linear\nrow_order=top_is_max_y\n")
    return [path, side]


class DiagnosticsWriter:
    """Comma-separated diagnostics stream with a fixed header."""

    def __init__(self, path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(DiagnosticsRecord.header())

    def write(self, record: DiagnosticsRecord) -> None:
        self._writer.writerow(
            [format_value(x) if isinstance(x, float) else x for x in record.row()])

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics(path) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def discover_snapshots(directory) -> dict[int, dict[str, Path]]:
    """Map step -> {field: path} for csv_grid snapshots in ``directory``."""
    found: dict[int, dict[str, Path]] = {}
    for path in sorted(Path(directory).glob("snap_*_*.csv")):
        m = re.fullmatch(r"snap_(\d+)_(\w)\.csv", path.name)
        if m:
            found.setdefault(int(m.group(1)), {})[m.group(2)] = path
    return found


def config_dict(cfg: RunConfig) -> dict[str, Any]:
    return dataclasses.asdict(cfg)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_dict(cfg).items())
