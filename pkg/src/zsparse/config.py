"""Plain-text key-value run configuration with sections and strict keys.

Format: ``[section]`` headers, ``key = value`` lines, ``#`` comments. Every
key has a default; unknown sections or keys are rejected with the offending
line number. The only environment override is ZSPARSE_OUT for the output
directory.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .fields import Grid
from .solver import FileInit, KidaInit, LowFreqNoiseInit, SolverConfig


class ConfigError(Exception):
    """Malformed configuration text or values."""


_DEFAULTS: dict[str, dict[str, object]] = {
    "solver": {
        "n": 64,
        "L": 2.0 * math.pi,
        "nu": 5e-3,
        "dt": 5e-3,
        "cfl": None,
        "t_end": 1.0,
        "snapshot_every": 10,
        "ic": "kida",
        "ic_seed": 0,
        "ic_k_max": 4,
        "ic_amplitude": 1.0,
        "ic_path": "",
        "dealias": True,
    },
    "diagnostics": {
        "lambda": "frozen",
        "delta": 0.75,
        "radii_per_decade": 24,
        "r_min_cells": 2.0,
        "r_max_fraction": 0.49,
        "n_dir": 64,
        "m_line": 256,
        "c_m": 1.0,
        "n_points": 32,
        "stride": 1,
        "workers": 2,
        "set_id": "max",
    },
    "output": {
        "dir": "out",
    },
}

_OPTIONAL_FLOATS = {("solver", "dt"), ("solver", "cfl")}


@dataclass
class RunConfig:
    """Typed view of the effective configuration plus its provenance hash."""

    values: dict[str, dict[str, object]]
    config_hash: str
    source: str = "<defaults>"

    def get(self, section: str, key: str):
        return self.values[section][key]

    # -- solver section -------------------------------------------------

    def grid(self) -> Grid:
        return Grid(int(self.get("solver", "n")), float(self.get("solver", "L")))

    def solver_config(self) -> SolverConfig:
        s = self.values["solver"]
        ic_name = str(s["ic"]).lower()
        if ic_name == "kida":
            ic = KidaInit()
        elif ic_name == "lowfreq_noise":
            ic = LowFreqNoiseInit(
                seed=int(s["ic_seed"]),
                k_max=int(s["ic_k_max"]),
                amplitude=float(s["ic_amplitude"]),
            )
        elif ic_name == "file":
            if not s["ic_path"]:
                raise ConfigError("ic = file requires a nonempty ic_path")
            ic = FileInit(path=str(s["ic_path"]))
        else:
            raise ConfigError(f"unknown initial condition '{s['ic']}'")
        return SolverConfig(
            grid=self.grid(),
            nu=float(s["nu"]),
            dt=None if s["dt"] is None else float(s["dt"]),
            cfl=None if s["cfl"] is None else float(s["cfl"]),
            t_end=float(s["t_end"]),
            snapshot_every=int(s["snapshot_every"]),
            ic=ic,
            dealias=bool(s["dealias"]),
        )

    # -- diagnostics section --------------------------------------------

    def cut_fraction(self) -> float:
        """The cut fraction lambda: either the frozen value 1/(2M) or an override."""
        raw = self.values["diagnostics"]["lambda"]
        if isinstance(raw, str) and raw.lower() == "frozen":
            from .bounds import frozen_constants

            return frozen_constants().lambda_cut
        return float(raw)

    def radii(self, grid: Grid):
        from .sparseness import geometric_radii

        d = self.values["diagnostics"]
        r_min = float(d["r_min_cells"]) * grid.spacing
        r_max = float(d["r_max_fraction"]) * grid.L
        return geometric_radii(r_min, r_max, int(d["radii_per_decade"]))

    def output_dir(self) -> Path:
        env = os.environ.get("ZSPARSE_OUT")
        return Path(env) if env else Path(str(self.get("output", "dir")))


def _coerce(section: str, key: str, raw: str, line_no: int):
    default = _DEFAULTS[section][key]
    raw = raw.strip()
    if (section, key) in _OPTIONAL_FLOATS:
        if raw == "" or raw.lower() == "none":
            return None
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"line {line_no}: expected a number for '{key}', got '{raw}'")
    if isinstance(default, bool):
        if raw.lower() in ("true", "yes", "on", "1"):
            return True
        if raw.lower() in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"line {line_no}: expected a boolean for '{key}', got '{raw}'")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"line {line_no}: expected an integer for '{key}', got '{raw}'")
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"line {line_no}: expected a number for '{key}', got '{raw}'")
    # strings: 'lambda' accepts either 'frozen' or a number, keep raw text
    return raw


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    values = {sec: dict(keys) for sec, keys in _DEFAULTS.items()}
    section: str | None = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            if name not in _DEFAULTS:
                raise ConfigError(f"{source}: unknown section '[{name}]' at line {line_no}")
            section = name
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}: expected 'key = value' at line {line_no}: '{stripped}'")
        if section is None:
            raise ConfigError(f"{source}: key outside any section at line {line_no}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _DEFAULTS[section]:
            raise ConfigError(
                f"{source}: unknown key '{key}' in section [{section}] at line {line_no}"
            )
        try:
            values[section][key] = _coerce(section, key, raw, line_no)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None
    return RunConfig(values=values, config_hash=_hash(values), source=source)


def parse_config_file(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config_text(path.read_text(), source=str(path))


def default_config() -> RunConfig:
    return parse_config_text("", source="<defaults>")


def canonical_text(values: dict[str, dict[str, object]]) -> str:
    lines = []
    for sec in sorted(values):
        for key in sorted(values[sec]):
            lines.append(f"{sec}.{key}={values[sec][key]!r}")
    return "\n".join(lines)


def _hash(values: dict[str, dict[str, object]]) -> str:
    return hashlib.sha256(canonical_text(values).encode()).hexdigest()[:16]
