"""Plot the sweep products written by ``srlaser sweep``.

    python docs/plot_maps.py out/   # reads power_map.csv and linewidth_map.csv

Needs matplotlib, which is not a package dependency.
"""

import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np


def load(path, column):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    w = np.unique([float(r["w_s^-1"]) for r in rows])
    n = np.unique([int(r["N"]) for r in rows])
    z = np.full((n.size, w.size), np.nan)
    for r in rows:
        z[np.searchsorted(n, int(r["N"])), np.searchsorted(w, float(r["w_s^-1"]))] = float(r[column])
    return w, n, z


def main(out_dir):
    out = Path(out_dir)
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5), constrained_layout=True)
    for ax, name, column, label in (
        (axes[0], "power_map.csv", "power_W", "log10 power [W]"),
        (axes[1], "linewidth_map.csv", "linewidth_fwhm_Hz", "log10 linewidth [Hz]"),
    ):
        w, n, z = load(out / name, column)
        with np.errstate(divide="ignore", invalid="ignore"):
            mesh = ax.pcolormesh(w, n, np.log10(z), shading="nearest")
        ax.set(xscale="log", yscale="log", xlabel="pump w [1/s]", ylabel="atom number N")
        fig.colorbar(mesh, ax=ax, label=label)
    fig.savefig(out / "maps.png", dpi=150)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
