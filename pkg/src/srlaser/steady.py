"""Stationary states of the cumulant equations at zero detuning.

The four stationarity conditions reduce to one quadratic in the inversion
``d``::

    Im c       = (w + gamma)(d0 - d) / (2 rabi)
    photons    = N rabi Im c / kappa
    spin_spin  = rabi d Im c / Gamma

and the balance of the atom-field coherence equation. The quadratic always
has exactly one root in (-1, d0), where the photon number is positive;
roots are nevertheless found generically by a sign-change scan so the solver
does not rely on that argument.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .constants import HBAR
from .cumulant import COMPONENTS, CumulantState, jacobian, rhs_array, scaled_residual, uncorrelated_state
from .errors import NoCollectiveRegionError, ParameterError, SolverError
from .params import SystemParams, _cooperativity, dipole_relaxation, saturated_inversion

__all__ = [
    "Branch",
    "SteadyReport",
    "steady_exact",
    "inversion_polynomial",
    "state_from_inversion",
    "spin_spin_closed_form",
    "gain_margin",
    "thresholds_empirical",
    "critical_atom_number",
    "collective_growth_rate",
    "stability",
    "output_power",
]

STABILITY_MARGIN = 1e-12  # s^-1
RESIDUAL_TOL = 1e-10


class Branch(str, enum.Enum):
    BELOW_THRESHOLD = "below_threshold"
    COLLECTIVE = "collective"
    QUENCHED = "quenched"


@dataclass(frozen=True)
class SteadyReport:
    state: CumulantState
    power: float  # W
    collective: bool
    stable: bool
    jacobian_eigs: tuple
    branch: Branch
    multistable: bool = False
    residual: float = 0.0
    params: SystemParams | None = field(default=None, compare=False, repr=False)

    def as_dict(self) -> dict:
        """JSON-ready dictionary; every quantity carries its unit."""
        s = self.state
        return {
            "inversion": {"value": s.inversion, "unit": "1"},
            "coherence_re": {"value": s.coherence_re, "unit": "1"},
            "coherence_im": {"value": s.coherence_im, "unit": "1"},
            "spin_spin": {"value": s.spin_spin, "unit": "1"},
            "photons": {"value": s.photons, "unit": "1"},
            "power": {"value": self.power, "unit": "W"},
            "collective": self.collective,
            "stable": self.stable,
            "multistable": self.multistable,
            "branch": self.branch.value,
            "residual": {"value": self.residual, "unit": "1 (rate-scaled)"},
            "jacobian_eigs": {
                "value": [[z.real, z.imag] for z in self.jacobian_eigs],
                "unit": "s^-1 (re, im)",
            },
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


def output_power(params: SystemParams, photons: float) -> float:
    """Outcoupled power hbar * omega_a * kappa * photons, in W."""
    if photons < 0:
        raise ParameterError("photons must be >= 0")
    return HBAR * params.omega_a * params.kappa * photons


def stability(params: SystemParams, state) -> np.ndarray:
    """Eigenvalues (s^-1) of the linearised cumulant equations at ``state``."""
    return np.linalg.eigvals(jacobian(state, params))


def inversion_polynomial(params: SystemParams) -> np.ndarray:
    """Coefficients (highest first) of the stationarity quadratic in d.

    Normalised by (Gamma + kappa)(w + gamma) to keep magnitudes near unity.
    """
    p = params
    u = p.pump + p.gamma
    d0 = saturated_inversion(p.pump, p.gamma)
    big_gamma = dipole_relaxation(p)
    om2 = p.rabi**2
    k = om2 * u * (p.n_atoms / p.kappa + (p.n_atoms - 1) / big_gamma)
    norm = (big_gamma + p.kappa) * u
    return np.array(
        [-k, (big_gamma + p.kappa) * u + om2 + k * d0, -(big_gamma + p.kappa) * u * d0 + om2]
    ) / norm


def state_from_inversion(params: SystemParams, d: float) -> CumulantState:
    p = params
    u = p.pump + p.gamma
    d0 = saturated_inversion(p.pump, p.gamma)
    big_gamma = dipole_relaxation(p)
    if p.rabi == 0:
        return CumulantState(d, 0.0, 0.0, 0.0, 0.0)
    loss = u * (d0 - d)
    return CumulantState(
        inversion=d,
        coherence_re=0.0,
        coherence_im=loss / (2.0 * p.rabi),
        spin_spin=d * loss / (2.0 * big_gamma),
        photons=p.n_atoms * loss / (2.0 * p.kappa),
    )


def _bracket_roots(coeffs: np.ndarray, breakpoints, subdivisions: int):
    grid = np.linspace(-1.0, 1.0, subdivisions + 1)
    extra = [b for b in breakpoints if -1.0 < b < 1.0]
    grid = np.unique(np.concatenate([grid, extra]))
    vals = np.polyval(coeffs, grid)
    roots = [float(x) for x, v in zip(grid, vals) if v == 0.0]
    change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    f = lambda x: np.polyval(coeffs, x)  # noqa: E731
    for i in change:
        roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps))
    return sorted(set(roots))


def _polish(x: np.ndarray, params: SystemParams, iterations: int = 3) -> np.ndarray:
    best = x
    best_res = float(np.max(scaled_residual(x, params)))
    for _ in range(iterations):
        try:
            step = np.linalg.solve(jacobian(best, params), -rhs_array(best, params))
        except np.linalg.LinAlgError:
            break
        trial = best + step
        res = float(np.max(scaled_residual(trial, params)))
        if not res < best_res:
            break
        best, best_res = trial, res
    return best


def collective_growth_rate(params: SystemParams) -> float:
    """Largest real part of the linearisation about the uncorrelated state.

    Positive exactly when collective correlations grow out of freshly
    repumped, uncorrelated atoms: the sharp criterion used to classify the
    collective branch.
    """
    x = uncorrelated_state(params).to_array()
    return float(np.max(np.linalg.eigvals(jacobian(x, params)).real))


def _pump_of_peak_gain(params: SystemParams) -> float:
    a = params.n_atoms * params.gamma * _cooperativity(params)
    return max(math.sqrt(2.0 * params.gamma * a) - params.gamma, params.gamma)


def steady_exact(params: SystemParams, subdivisions: int = 2048, polish: bool = True) -> SteadyReport:
    """Exact stationary state of the cumulant equations (zero detuning only)."""
    if params.detuning != 0:
        raise ParameterError("steady_exact solves the resonant case only (detuning must be 0)")
    d0 = saturated_inversion(params.pump, params.gamma)
    coeffs = inversion_polynomial(params)
    breakpoints = [d0]
    if coeffs[0] != 0:
        breakpoints.append(-coeffs[1] / (2.0 * coeffs[0]))
    roots = _bracket_roots(coeffs, breakpoints, subdivisions)

    candidates, diagnostics = [], []
    for d in roots:
        x = state_from_inversion(params, d).to_array()
        if polish:
            x = _polish(x, params)
        state = CumulantState.from_array(x)
        eigs = stability(params, x)
        stable = bool(np.max(eigs.real) < -STABILITY_MARGIN)
        physical = state.photons >= 0 and state.is_physical(1e-12)
        res = float(np.max(scaled_residual(x, params)))
        diagnostics.append(
            {"inversion": d, "photons": state.photons, "stable": stable,
             "physical": physical, "residual": res}
        )
        if stable and physical:
            candidates.append((state, eigs, res))
    if not candidates:
        raise SolverError("no stable physical stationary state", diagnostics)

    candidates.sort(key=lambda c: c[0].photons, reverse=True)
    state, eigs, res = candidates[0]
    collective = collective_growth_rate(params) > 0
    if collective:
        branch = Branch.COLLECTIVE
    elif params.pump <= _pump_of_peak_gain(params):
        branch = Branch.BELOW_THRESHOLD
    else:
        branch = Branch.QUENCHED
    return SteadyReport(
        state=state,
        power=output_power(params, max(state.photons, 0.0)),
        collective=collective,
        stable=True,
        jacobian_eigs=tuple(complex(z) for z in eigs),
        branch=branch,
        multistable=len(candidates) > 1,
        residual=res,
        params=params,
    )


def gain_margin(params: SystemParams) -> float:
    """Collective gain minus dipole loss, d0 N gamma C - Gamma (s^-1)."""
    a = params.n_atoms * params.gamma * _cooperativity(params)
    return saturated_inversion(params.pump, params.gamma) * a - dipole_relaxation(params)


def spin_spin_closed_form(params: SystemParams) -> float:
    """Non-trivial spin-spin root of the approximate steady-state equation.

    (d0 N gamma C - Gamma)(w + gamma) / (2 N^2 gamma^2 C^2); obtained by
    keeping only kappa in the coherence decay and only the collective term
    in its source.
    """
    a = params.n_atoms * params.gamma * _cooperativity(params)
    if a == 0:
        raise ParameterError("closed form undefined without atom-cavity coupling")
    return gain_margin(params) * (params.pump + params.gamma) / (2.0 * a * a)


def thresholds_empirical(params: SystemParams, n_atoms: int | None = None):
    """Lower and upper pump thresholds of the collective region.

    Both zeros of :func:`spin_spin_closed_form` in the pump rate, located by
    bracketing root-finding for the atom number ``n_atoms`` (default: that
    of ``params``). Raises :class:`NoCollectiveRegionError` when the
    closed form is never positive.
    """
    if n_atoms is not None:
        params = params.replace(n_atoms=n_atoms)
    if params.rabi == 0:
        raise NoCollectiveRegionError("no coupling, no collective region")
    w_peak = _pump_of_peak_gain(params)
    f = lambda w: gain_margin(params.replace(pump=w))  # noqa: E731
    top = f(w_peak)
    scale = params.n_atoms * params.gamma * _cooperativity(params)
    if abs(top) <= 1e-12 * scale:
        return w_peak, w_peak
    if top < 0:
        raise NoCollectiveRegionError(
            f"N={params.n_atoms} is below the critical atom number "
            f"{critical_atom_number(params):.6g}"
        )
    hi = w_peak
    while f(hi) > 0:
        hi *= 2.0
    lower = brentq(f, 0.0, w_peak, xtol=1e-14, rtol=1e-15)
    upper = brentq(f, w_peak, hi, xtol=1e-14, rtol=1e-15)
    return lower, upper


def critical_atom_number(params: SystemParams) -> float:
    """Atom number at which the two thresholds merge (exact tangency).

    Tends to 2/(C gamma T2) when gamma T2 -> 0.
    """
    g = params.gamma
    t = params.t2_inv
    a_crit = 2.0 * t + 4.0 * g + 4.0 * math.sqrt(g * (t + g))
    return a_crit / (g * _cooperativity(params))

