"""Second-order cumulant equations of motion and their time integration.

The state vector holds five real numbers::

    [inversion, Re<a+ s1->, Im<a+ s1->, <s1+ s2->, <a+ a>]

Third-order cumulants are dropped. Because the model is phase invariant,
<a>, <s-> and friends vanish identically and do not appear.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SettleTimeout, StiffnessError
from .params import SystemParams, dipole_relaxation, saturated_inversion

__all__ = [
    "COMPONENTS",
    "CumulantState",
    "Trajectory",
    "rhs",
    "rhs_array",
    "jacobian",
    "relaxation_rates",
    "scaled_residual",
    "uncorrelated_state",
    "integrate",
    "settle",
]

COMPONENTS = ("inversion", "coherence_re", "coherence_im", "spin_spin", "photons")

# Absolute floors used when a component is exactly zero in residual scaling.
_RESIDUAL_FLOOR = 1e-300


@dataclass(frozen=True)
class CumulantState:
    inversion: float
    coherence_re: float
    coherence_im: float
    spin_spin: float
    photons: float

    @property
    def coherence(self) -> complex:
        return complex(self.coherence_re, self.coherence_im)

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.inversion, self.coherence_re, self.coherence_im, self.spin_spin, self.photons],
            dtype=float,
        )

    @classmethod
    def from_array(cls, x) -> "CumulantState":
        return cls(*(float(v) for v in x))

    def as_dict(self) -> dict:
        return dict(zip(COMPONENTS, self.to_array().tolist()))

    def is_physical(self, tol: float = 1e-12) -> bool:
        return (
            -1 - tol <= self.inversion <= 1 + tol
            and self.photons >= -tol
            and -0.25 - tol <= self.spin_spin <= 0.25 + tol
        )


def uncorrelated_state(params: SystemParams) -> CumulantState:
    """Freshly repumped atoms: inversion at d0, no correlations, empty cavity."""
    return CumulantState(saturated_inversion(params.pump, params.gamma), 0.0, 0.0, 0.0, 0.0)


def relaxation_rates(params: SystemParams) -> np.ndarray:
    """Linear decay rate of each component when the coupling is switched off."""
    big_gamma = dipole_relaxation(params)
    coh = 0.5 * (big_gamma + params.kappa)
    return np.array([params.pump + params.gamma, coh, coh, big_gamma, params.kappa])


def rhs_array(x: np.ndarray, params: SystemParams) -> np.ndarray:
    d, cr, ci, s, n = x
    p = params
    wg = p.pump + p.gamma
    d0 = (p.pump - p.gamma) / wg
    big_gamma = wg + 2.0 * p.t2_inv
    a = 0.5 * (big_gamma + p.kappa)
    om = p.rabi
    delta = p.detuning
    bracket = n * d + 0.5 * (d + 1.0) + (p.n_atoms - 1) * s
    return np.array(
        [
            -wg * (d - d0) - 2.0 * om * ci,
            -a * cr - delta * ci,
            -a * ci + delta * cr + 0.5 * om * bracket,
            -big_gamma * s + om * d * ci,
            -p.kappa * n + p.n_atoms * om * ci,
        ]
    )


def rhs(state: CumulantState, params: SystemParams) -> CumulantState:
    """Time derivative of every component, packed as a CumulantState."""
    return CumulantState.from_array(rhs_array(state.to_array(), params))


def jacobian(x, params: SystemParams) -> np.ndarray:
    """Analytic 5x5 Jacobian of :func:`rhs_array` at ``x``."""
    if isinstance(x, CumulantState):
        x = x.to_array()
    d, cr, ci, s, n = x
    p = params
    wg = p.pump + p.gamma
    big_gamma = wg + 2.0 * p.t2_inv
    a = 0.5 * (big_gamma + p.kappa)
    om = p.rabi
    delta = p.detuning
    nat = p.n_atoms
    return np.array(
        [
            [-wg, 0.0, -2.0 * om, 0.0, 0.0],
            [0.0, -a, -delta, 0.0, 0.0],
            [0.5 * om * (n + 0.5), delta, -a, 0.5 * om * (nat - 1), 0.5 * om * d],
            [om * ci, 0.0, om * d, -big_gamma, 0.0],
            [0.0, 0.0, nat * om, 0.0, -p.kappa],
        ]
    )


def scaled_residual(x: np.ndarray, params: SystemParams) -> np.ndarray:
    """|dx_i/dt| / (rate_i * |x_i|): an estimate of each component's relative
    distance from stationarity that is not dominated by the fast cavity."""
    f = np.abs(rhs_array(x, params))
    scale = relaxation_rates(params) * np.maximum(np.abs(x), _RESIDUAL_FLOOR)
    return f / scale


# -- adiabatic elimination -------------------------------------------------


def _slaved_field(d, s, params: SystemParams):
    """Coherence and photon number enslaved to (d, s) for a fast cavity."""
    p = params
    big_gamma = dipole_relaxation(p)
    a = 0.5 * (big_gamma + p.kappa)
    delta = p.detuning
    denom = a * a + delta * delta
    source = 0.5 * (d + 1.0) + (p.n_atoms - 1) * s
    # Im c = rabi * a * B / (2 denom), B = n d + source, n = N rabi Im(c) / kappa
    gain = p.n_atoms * p.rabi**2 * a * d / (2.0 * denom * p.kappa)
    bracket = source / (1.0 - gain)
    pref = 0.5 * p.rabi * bracket / denom
    cr = -pref * delta
    ci = pref * a
    n = p.n_atoms * p.rabi * ci / p.kappa
    return cr, ci, n


def _reduced_rhs(t, y, params: SystemParams):
    d, s = y
    p = params
    wg = p.pump + p.gamma
    d0 = (p.pump - p.gamma) / wg
    _, ci, _ = _slaved_field(d, s, p)
    return [-wg * (d - d0) - 2.0 * p.rabi * ci, -dipole_relaxation(p) * s + p.rabi * d * ci]


# -- trajectories ----------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    values: np.ndarray  # shape (len(times), 5)
    params: SystemParams

    def __post_init__(self):
        if self.values.shape != (len(self.times), 5):
            raise ValueError("values must have shape (len(times), 5)")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def states(self) -> list[CumulantState]:
        return [CumulantState.from_array(row) for row in self.values]

    @property
    def final(self) -> CumulantState:
        return CumulantState.from_array(self.values[-1])

    def component(self, name: str) -> np.ndarray:
        return self.values[:, COMPONENTS.index(name)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("time",) + COMPONENTS)
            for t, row in zip(self.times, self.values):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


_METHODS = {"implicit": "Radau", "explicit": "DOP853"}
# Integrator tolerance used by settle(), relative to the settling tolerance.
SETTLE_TOL_FACTOR = 0.1


def _ivp_settings(params, tol, method):
    if method not in ("implicit", "explicit", "adiabatic"):
        raise ValueError(f"unknown method {method!r}")
    if not (1e-14 < tol < 1e-2):
        raise ValueError("tol must lie in (1e-14, 1e-2)")
    kw = dict(rtol=tol, atol=tol * 1e-6)
    if method == "implicit":
        kw["jac"] = lambda t, x: jacobian(x, params)
    return kw


def _limiting_component(x, params) -> str:
    r = scaled_residual(np.asarray(x, float), params)
    r = np.where(np.isfinite(r), r, np.finfo(float).max)
    return COMPONENTS[int(np.argmax(r))]


def _expand_reduced(sol_y, params) -> np.ndarray:
    d, s = sol_y
    cr, ci, n = _slaved_field(d, s, params)
    return np.column_stack([d, cr, ci, s, n])


def integrate(
    initial: CumulantState | None,
    params: SystemParams,
    t_end: float,
    tol: float = 1e-8,
    method: str = "implicit",
    t_eval=None,
) -> Trajectory:
    """Integrate the cumulant equations from ``initial`` to ``t_end``.

    ``method`` selects the scheme:

    ``"implicit"``
        Radau IIA with the analytic Jacobian. Default; copes with the
        kappa/gamma ~ 1e8 stiffness.
    ``"explicit"``
        Dormand-Prince 8(5,3). Step size is bounded by the cavity rate, so
        only practical for short horizons or moderate kappa.
    ``"adiabatic"``
        Field variables slaved to (inversion, spin_spin); valid once the
        cavity has relaxed and kappa >> every atomic rate.
    """
    if t_end <= 0:
        raise ValueError("t_end must be > 0")
    if initial is None:
        initial = uncorrelated_state(params)
    kw = _ivp_settings(params, tol, method)
    x0 = initial.to_array()
    if method == "adiabatic":
        sol = solve_ivp(
            _reduced_rhs, (0.0, t_end), [x0[0], x0[3]], method="Radau",
            t_eval=t_eval, args=(params,), **kw
        )
    else:
        sol = solve_ivp(
            lambda t, x: rhs_array(x, params), (0.0, t_end), x0,
            method=_METHODS[method], t_eval=t_eval, **kw
        )
    if sol.status < 0:
        last = sol.y[:, -1] if sol.y.size else x0
        if method == "adiabatic":
            last = _expand_reduced(np.atleast_2d(last).T.reshape(2, -1), params)[-1]
        comp = _limiting_component(last, params)
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        raise StiffnessError(
            f"integration failed at t={t_fail:.6g} s ({sol.message}); "
            f"limiting component: {comp}",
            component=comp,
            time=t_fail,
        )
    values = _expand_reduced(sol.y, params) if method == "adiabatic" else sol.y.T
    return Trajectory(np.asarray(sol.t), np.ascontiguousarray(values), params)


def settle(
    params: SystemParams,
    tol: float = 1e-6,
    t_max: float = 100.0,
    initial: CumulantState | None = None,
    method: str = "implicit",
):
    """Integrate until every rate-scaled derivative falls below ``tol``.

    Returns ``(state, settling_time)``. Raises :class:`SettleTimeout`, with
    the last state attached, if that does not happen before ``t_max``.
    """
    if initial is None:
        initial = uncorrelated_state(params)
    int_tol = max(tol * SETTLE_TOL_FACTOR, 1e-13)
    kw = _ivp_settings(params, int_tol, method)
    log_tol = math.log(tol)

    if method == "adiabatic":

        def full(y):
            d, s = y
            cr, ci, n = _slaved_field(d, s, params)
            return np.array([d, cr, ci, s, n])

        fun = lambda t, y: _reduced_rhs(t, y, params)  # noqa: E731
        y0 = [initial.inversion, initial.spin_spin]
        solver = "Radau"
    else:
        full = np.asarray
        fun = lambda t, x: rhs_array(x, params)  # noqa: E731
        y0 = initial.to_array()
        solver = _METHODS[method]

    def settled(t, y):
        r = scaled_residual(full(y), params)
        # Only component-wise relative derivatives of meaningful entries count;
        # exactly vanishing components with vanishing drive give 0/floor = 0.
        worst = float(np.max(r))
        if not math.isfinite(worst) or worst <= 0:
            return -1.0 if worst == 0 else 1.0
        return math.log(worst) - log_tol

    settled.terminal = True
    settled.direction = -1

    if settled(0.0, np.asarray(y0, float)) <= 0:
        return CumulantState.from_array(full(np.asarray(y0, float))), 0.0

    sol = solve_ivp(fun, (0.0, t_max), y0, method=solver, events=settled, **kw)
    if sol.status < 0:
        comp = _limiting_component(full(sol.y[:, -1]), params)
        raise StiffnessError(
            f"integration failed at t={sol.t[-1]:.6g} s ({sol.message}); "
            f"limiting component: {comp}",
            component=comp,
            time=float(sol.t[-1]),
        )
    if sol.status == 1 and sol.t_events[0].size:
        t_hit = float(sol.t_events[0][0])
        return CumulantState.from_array(full(sol.y_events[0][0])), t_hit
    last = CumulantState.from_array(full(sol.y[:, -1]))
    raise SettleTimeout(
        f"no steady state within t_max={t_max} s", state=last, time=float(sol.t[-1])
    )
