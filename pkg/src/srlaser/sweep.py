"""(pump, atom number) sweeps producing power and linewidth maps.

Cells are independent; rows of constant N are farmed out to worker
processes and reassembled in grid order, so output does not depend on the
worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import NoCollectiveRegionError
from .params import SystemParams, derive
from .spectrum import linewidth
from .steady import steady_exact, thresholds_empirical

__all__ = ["sweep_cell", "run_sweep", "power_map_csv", "linewidth_map_csv", "collective_boundaries"]

_NAN = float("nan")


def sweep_cell(params: SystemParams, pump: float, n_atoms: int) -> dict:
    """Steady state and linewidth at one grid point; failures stay in-band."""
    cell = {"w": float(pump), "N": int(n_atoms), "error_code": ""}
    try:
        p = params.replace(pump=float(pump), n_atoms=int(n_atoms))
        rep = steady_exact(p)
        lw = linewidth(p, rep)
        cell.update(
            power=rep.power,
            photons=rep.state.photons,
            spin_spin=rep.state.spin_spin,
            inversion=rep.state.inversion,
            branch=rep.branch.value,
            linewidth=lw.linewidth_fwhm,
            center=lw.center_offset,
        )
    except Exception as exc:  # recorded per cell, never aborts the sweep
        cell.update(
            power=_NAN, photons=_NAN, spin_spin=_NAN, inversion=_NAN,
            branch="error", linewidth=_NAN, center=_NAN,
            error_code=type(exc).__name__,
        )
    return cell


def _row(args) -> list[dict]:
    params, w_grid, n = args
    return [sweep_cell(params, w, n) for w in w_grid]


def run_sweep(params: SystemParams, w_grid, n_grid, workers: int = 1) -> list[dict]:
    """All cells, ordered by N then w."""
    tasks = [(params, [float(w) for w in w_grid], int(n)) for n in n_grid]
    if workers <= 1:
        rows = [_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row, tasks))
    return [cell for row in rows for cell in row]


def collective_boundaries(params: SystemParams, n_atoms: int):
    """Closed-form (lower, upper) pump boundaries, or None below N_crit."""
    try:
        return thresholds_empirical(params, n_atoms)
    except NoCollectiveRegionError:
        return None


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _boundary_table(params, cells):
    table = {}
    for c in cells:
        if c["N"] not in table:
            table[c["N"]] = collective_boundaries(params, c["N"])
    return table


def power_map_csv(params: SystemParams, cells: list[dict]) -> str:
    """Long-format power map; boundary columns hold the closed-form
    collective-region limits for the row's N (empty when there is none)."""
    bounds = _boundary_table(params, cells)
    header = ["w_s^-1", "N", "power_W", "photons", "spin_spin", "inversion",
              "branch", "error_code", "boundary_lower_s^-1", "boundary_upper_s^-1"]
    rows = []
    for c in cells:
        b = bounds[c["N"]] or (None, None)
        rows.append([c["w"], c["N"], c["power"], c["photons"], c["spin_spin"],
                     c["inversion"], c["branch"], c["error_code"], b[0], b[1]])
    return _csv(header, rows)


def linewidth_map_csv(params: SystemParams, cells: list[dict]) -> str:
    """Long-format linewidth map with the three reference pump rates
    (gamma, 1/T2, w_max(N)) repeated on every row."""
    header = ["w_s^-1", "N", "linewidth_fwhm_s^-1", "linewidth_fwhm_Hz", "center_s^-1",
              "branch", "error_code", "gamma_s^-1", "t2_inv_s^-1", "w_max_s^-1"]
    rows = []
    for c in cells:
        w_max = derive(params.replace(n_atoms=c["N"])).w_max
        rows.append([c["w"], c["N"], c["linewidth"], c["linewidth"] / (2 * np.pi),
                     c["center"], c["branch"], c["error_code"],
                     params.gamma, params.t2_inv, w_max])
    return _csv(header, rows)
