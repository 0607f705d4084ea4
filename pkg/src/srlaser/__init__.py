"""Cumulant-expansion model of a superradiant bad-cavity laser.

Steady states, thresholds, output power and linewidth of N two-level atoms
collectively emitting into a strongly damped cavity mode, with an exact
few-atom master-equation solver for validation.
"""

__version__ = "0.1.0"

from .cumulant import CumulantState, Trajectory, integrate, rhs, settle
from .params import (
    CavityGeometry,
    DerivedParams,
    SystemParams,
    cooperativity,
    derive,
    rabi_from_geometry,
    sr87_geometry,
    sr87_params,
)
from .spectrum import SpectrumResult, build_qrt, linewidth, pulling_curve, spectrum_samples
from .steady import (
    Branch,
    SteadyReport,
    output_power,
    spin_spin_closed_form,
    stability,
    steady_exact,
    thresholds_empirical,
)

__all__ = [
    "CumulantState", "Trajectory", "integrate", "rhs", "settle",
    "CavityGeometry", "DerivedParams", "SystemParams", "cooperativity", "derive",
    "rabi_from_geometry", "sr87_geometry", "sr87_params",
    "SpectrumResult", "build_qrt", "linewidth", "pulling_curve", "spectrum_samples",
    "Branch", "SteadyReport", "output_power", "spin_spin_closed_form", "stability",
    "steady_exact", "thresholds_empirical",
]
