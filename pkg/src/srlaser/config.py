"""Run configuration: an INI-style key-value file plus command-line overrides.

Example::

    [params]
    n_atoms = 1000000
    gamma = 0.01
    pump = 300
    t2_inv = 1
    kappa = 9.4e5
    rabi = 37

    [sweep]
    w_min = 1e-3
    w_max = 1e5
    w_points = 100
    n_min = 1e3
    n_max = 1e7
    n_points = 100

    [run]
    outputs = steady, power_map, linewidth_map
    output_dir = out
    workers = 4

A ``[geometry]`` section (mode_volume, finesse, cavity_length,
dipole_moment, wavelength) may stand in for ``rabi``; it also supplies
``kappa`` and ``omega_a`` when those are not given. All rates are s^-1.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .params import (
    CavityGeometry,
    SystemParams,
    kappa_from_geometry,
    rabi_from_geometry,
    sr87_params,
)

__all__ = ["ConfigError", "SweepSpec", "RunConfig", "load_config", "PRODUCTS"]

PRODUCTS = ("steady", "power_map", "linewidth_map", "spectrum", "trajectory", "oracle_report", "thresholds")

_SCHEMA = {
    "params": {
        "n_atoms": int, "gamma": float, "pump": float, "t2_inv": float,
        "kappa": float, "rabi": float, "detuning": float, "omega_a": float,
    },
    "geometry": {
        "mode_volume": float, "finesse": float, "cavity_length": float,
        "dipole_moment": float, "wavelength": float,
    },
    "sweep": {
        "w_min": float, "w_max": float, "w_points": int,
        "n_min": float, "n_max": float, "n_points": int,
    },
    "dynamics": {"t_end": float, "points": int, "method": str},
    "spectrum": {"span": float, "points": int, "deltas": str, "moments": str},
    "oracle": {"n_max": int},
    "run": {"outputs": str, "output_dir": str, "workers": int, "tol": float},
}


class ConfigError(ValueError):
    pass


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


@dataclass(frozen=True)
class SweepSpec:
    w_min: float = 1e-3
    w_max: float = 1e5
    w_points: int = 100
    n_min: float = 1e3
    n_max: float = 1e7
    n_points: int = 100

    def __post_init__(self):
        for lo, hi, pts, name in (
            (self.w_min, self.w_max, self.w_points, "w"),
            (self.n_min, self.n_max, self.n_points, "n"),
        ):
            if not (0 < lo < hi):
                raise ConfigError(f"sweep needs 0 < {name}_min < {name}_max")
            if pts < 2:
                raise ConfigError(f"sweep needs {name}_points >= 2")

    def w_grid(self) -> np.ndarray:
        return np.geomspace(self.w_min, self.w_max, self.w_points)

    def n_grid(self) -> np.ndarray:
        return np.rint(np.geomspace(self.n_min, self.n_max, self.n_points)).astype(int)


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    sweep: SweepSpec = field(default_factory=SweepSpec)
    outputs: tuple = ("steady",)
    output_dir: Path = Path(".")
    workers: int = 1
    tol: float = 1e-8
    dynamics: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)


def _parse_overrides(overrides) -> list[tuple[str, str, str]]:
    out = []
    for item in overrides or ():
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        out.append((section, name, value.strip()))
    return out


def load_config(path=None, overrides=()) -> RunConfig:
    """Parse and validate a configuration; unknown keys are an error."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if path is not None:
        text = Path(path).read_text()
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
    for section, name, value in _parse_overrides(overrides):
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value)

    unknown = []
    for section in cp.sections():
        if section not in _SCHEMA:
            unknown.append(f"[{section}]")
            continue
        unknown += [f"{section}.{k}" for k in cp[section] if k not in _SCHEMA[section]]
    if unknown:
        raise ConfigError("unknown configuration keys: " + ", ".join(sorted(unknown)))

    values: dict[str, dict] = {}
    for section, schema in _SCHEMA.items():
        values[section] = {}
        if not cp.has_section(section):
            continue
        for key, raw in cp[section].items():
            conv = _int if schema[key] is int else schema[key]
            try:
                values[section][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from None

    params = _build_params(values["params"], values["geometry"])
    run = values["run"]
    outputs = tuple(o.strip() for o in run.get("outputs", "steady").split(",") if o.strip())
    bad = [o for o in outputs if o not in PRODUCTS]
    if bad:
        raise ConfigError(f"unknown outputs: {', '.join(bad)}; choose from {', '.join(PRODUCTS)}")
    workers = run.get("workers", 1)
    if workers < 1:
        raise ConfigError("run.workers must be >= 1")
    tol = run.get("tol", 1e-8)
    if not (1e-14 < tol < 1e-2):
        raise ConfigError("run.tol must lie in (1e-14, 1e-2)")
    try:
        sweep = SweepSpec(**values["sweep"])
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(
        params=params,
        sweep=sweep,
        outputs=outputs,
        output_dir=Path(run.get("output_dir", ".")),
        workers=workers,
        tol=tol,
        dynamics=values["dynamics"],
        spectrum=values["spectrum"],
        oracle=values["oracle"],
    )


def _build_params(given: dict, geometry: dict) -> SystemParams:
    given = dict(given)
    if geometry:
        missing = [k for k in _SCHEMA["geometry"] if k not in geometry]
        if missing:
            raise ConfigError("geometry section incomplete, missing: " + ", ".join(missing))
        if "rabi" in given:
            raise ConfigError("give either params.rabi or a [geometry] section, not both")
        geom = CavityGeometry(**geometry)
        given["rabi"] = rabi_from_geometry(geom)
        given.setdefault("kappa", kappa_from_geometry(geom))
        given.setdefault("omega_a", geom.omega)
    pump = given.pop("pump", None)
    if pump is not None and not math.isfinite(pump):
        raise ConfigError("params.pump must be finite")
    return sr87_params(pump=pump, **given)
