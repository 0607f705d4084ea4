"""Command-line front end.

    srlaser steady     --config run.ini
    srlaser sweep      --config run.ini --set run.workers=8
    srlaser thresholds --set params.n_atoms=1e5

Every subcommand writes its artifacts into ``run.output_dir``. On failure
the process exits non-zero and prints a one-line JSON error summary to
stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .cumulant import integrate
from .errors import NoCollectiveRegionError
from .oracle import HilbertSpec, cumulant_error_report, format_report, report_csv
from .params import derive
from .spectrum import linewidth, pulling_curve, spectrum_samples
from .steady import collective_growth_rate, critical_atom_number, steady_exact, thresholds_empirical
from .sweep import linewidth_map_csv, power_map_csv, run_sweep

__all__ = ["main", "run"]


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return _finite(obj)


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _dump(path: Path, obj) -> Path:
    return _write(path, json.dumps(_sanitize(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _derived_dict(params):
    d = derive(params)
    return {
        "cooperativity": {"value": d.cooperativity, "unit": "1"},
        "d0": {"value": d.d0, "unit": "1"},
        "gamma_perp": {"value": d.gamma_perp, "unit": "s^-1"},
        "w_max": {"value": d.w_max, "unit": "s^-1"},
        "w_opt": {"value": d.w_opt, "unit": "s^-1"},
        "n_crit": {"value": d.n_crit, "unit": "1"},
        "p_max": {"value": d.p_max, "unit": "W"},
        "linewidth_floor": {"value": d.linewidth_floor, "unit": "s^-1"},
    }


def _params_dict(params):
    units = {"n_atoms": "1"}
    return {k: {"value": v, "unit": units.get(k, "s^-1")} for k, v in params.as_dict().items()}


def do_steady(cfg: RunConfig) -> list[Path]:
    rep = steady_exact(cfg.params)
    lw = linewidth(cfg.params, rep)
    out = {
        "params": _params_dict(cfg.params),
        "regime_warnings": list(cfg.params.regime_warnings),
        "derived": _derived_dict(cfg.params),
        "steady": rep.as_dict(),
        "linewidth_fwhm": {"value": lw.linewidth_fwhm, "unit": "s^-1"},
        "linewidth_fwhm_hz": {"value": lw.linewidth_hz, "unit": "Hz"},
    }
    return [_dump(cfg.output_dir / "steady.json", out)]


def do_thresholds(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    out = {
        "derived": _derived_dict(p),
        "n_crit_tangency": {"value": critical_atom_number(p), "unit": "1"},
        "collective_growth_rate": {"value": collective_growth_rate(p), "unit": "s^-1"},
    }
    try:
        lo, hi = thresholds_empirical(p)
        out["w_lower"] = {"value": lo, "unit": "s^-1"}
        out["w_upper"] = {"value": hi, "unit": "s^-1"}
    except NoCollectiveRegionError as exc:
        out["w_lower"] = out["w_upper"] = None
        out["note"] = str(exc)
    return [_dump(cfg.output_dir / "thresholds.json", out)]


def do_dynamics(cfg: RunConfig) -> list[Path]:
    t_end = cfg.dynamics.get("t_end", 1.0)
    points = cfg.dynamics.get("points", 1001)
    method = cfg.dynamics.get("method", "implicit")
    traj = integrate(None, cfg.params, t_end, tol=cfg.tol, method=method,
                     t_eval=np.linspace(0.0, t_end, points))
    path = cfg.output_dir / "trajectory.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    traj.to_csv(path)
    return [path]


def do_spectrum(cfg: RunConfig) -> list[Path]:
    p = cfg.params.replace(detuning=0.0)
    res = linewidth(p)
    span = cfg.spectrum.get("span", 10.0)
    points = cfg.spectrum.get("points", 401)
    half = span * res.linewidth_fwhm
    grid = np.linspace(res.center_offset - half, res.center_offset + half, points)
    samples = spectrum_samples(res, grid)
    lines = [
        f"# linewidth_fwhm_s^-1={res.linewidth_fwhm!r}",
        f"# linewidth_fwhm_Hz={res.linewidth_hz!r}",
        f"# center_s^-1={res.center_offset!r}",
        f"# center_Hz={res.center_offset / (2 * math.pi)!r}",
        "omega_offset_s^-1,spectral_density",
    ]
    lines += [f"{w!r},{s!r}" for w, s in samples.tolist()]
    paths = [_write(cfg.output_dir / "spectrum.csv", "\n".join(lines) + "\n")]
    deltas = cfg.spectrum.get("deltas")
    if deltas:
        grid = [float(x) for x in deltas.split(",") if x.strip()]
        mode = cfg.spectrum.get("moments", "frozen")
        rows = pulling_curve(cfg.params, grid, moments=mode)
        text = "delta_s^-1,center_offset_s^-1,linewidth_fwhm_s^-1\n"
        text += "".join(f"{d!r},{c!r},{w!r}\n" for d, c, w in rows)
        paths.append(_write(cfg.output_dir / "pulling.csv", text))
    return paths


def do_sweep(cfg: RunConfig, products=("power_map", "linewidth_map")) -> list[Path]:
    cells = run_sweep(cfg.params, cfg.sweep.w_grid(), cfg.sweep.n_grid(), cfg.workers)
    paths = []
    if "power_map" in products:
        paths.append(_write(cfg.output_dir / "power_map.csv", power_map_csv(cfg.params, cells)))
    if "linewidth_map" in products:
        paths.append(_write(cfg.output_dir / "linewidth_map.csv", linewidth_map_csv(cfg.params, cells)))
    return paths


def do_oracle(cfg: RunConfig) -> list[Path]:
    spec = HilbertSpec(cfg.params.n_atoms, cfg.oracle.get("n_max", 3))
    rows = cumulant_error_report(spec, cfg.params)
    return [
        _write(cfg.output_dir / "oracle_report.csv", report_csv(rows)),
        _write(cfg.output_dir / "oracle_report.txt", format_report(rows) + "\n"),
    ]


_SINGLE = {
    "steady": do_steady,
    "trajectory": do_dynamics,
    "spectrum": do_spectrum,
    "oracle_report": do_oracle,
    "thresholds": do_thresholds,
}


def run(cfg: RunConfig) -> list[Path]:
    """Produce every artifact listed in ``cfg.outputs``."""
    paths = []
    for product in cfg.outputs:
        if product in _SINGLE:
            paths += _SINGLE[product](cfg)
    maps = tuple(p for p in cfg.outputs if p in ("power_map", "linewidth_map"))
    if maps:
        paths += do_sweep(cfg, maps)
    return paths


_COMMANDS = {
    "steady": do_steady,
    "dynamics": do_dynamics,
    "spectrum": do_spectrum,
    "sweep": do_sweep,
    "oracle": do_oracle,
    "thresholds": do_thresholds,
    "run": run,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srlaser", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "steady": "exact steady state, power and linewidth -> steady.json",
        "dynamics": "integrate the cumulant equations -> trajectory.csv",
        "spectrum": "emission spectrum (and detuning pulling) -> spectrum.csv",
        "sweep": "(w, N) power and linewidth maps -> power_map.csv, linewidth_map.csv",
        "oracle": "exact small-N master equation vs cumulants -> oracle_report.*",
        "thresholds": "pump thresholds and critical atom number -> thresholds.json",
        "run": "produce every product listed in run.outputs",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="INI-style configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override one configuration value")
        p.add_argument("-o", "--output-dir", type=Path, help="shortcut for --set run.output_dir=...")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.output_dir is not None:
        overrides.append(f"run.output_dir={args.output_dir}")
    try:
        cfg = load_config(args.config, overrides)
        paths = _COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(json.dumps({"status": "error", "kind": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except Exception as exc:  # solver failures
        print(json.dumps({"status": "error", "kind": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
