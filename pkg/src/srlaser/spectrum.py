"""Emission spectrum from the two-time field correlation function.

Quantum regression closes the equations for ``<a+(t) a(0)>`` and
``<s+(t) a(0)>`` once ``<sz(t) a+(t) a(0)>`` is factorised as
``<sz> <a+(t) a(0)>``. The resulting 2x2 linear system, in the frame rotating
at the atomic frequency, is::

    d/dt [g, h] = [[-kappa/2 + i delta, i N rabi / 2],
                   [-i rabi <sz> / 2,   -Gamma / 2    ]] [g, h]

started from the stationary ``<a+ a>`` and ``<s+ a>``. Its slower eigenvalue
sets the laser linewidth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .cumulant import CumulantState, settle
from .params import SystemParams, dipole_relaxation
from .steady import SteadyReport, steady_exact

__all__ = [
    "QrtSystem",
    "SpectrumResult",
    "build_qrt",
    "decompose",
    "linewidth",
    "pulling_curve",
    "spectrum_samples",
    "sampled_fwhm",
    "slow_branch",
]


@dataclass(frozen=True)
class QrtSystem:
    matrix: np.ndarray  # 2x2 complex, s^-1
    initial: np.ndarray  # [<a+ a>, <s+ a>]
    params: SystemParams


@dataclass(frozen=True)
class SpectrumResult:
    eig_slow: complex
    eig_fast: complex
    weights: tuple  # amplitudes of exp(eig_slow t), exp(eig_fast t)
    defective: bool = False
    photons: float = 0.0

    @property
    def linewidth_fwhm(self) -> float:
        """Full width at half maximum, angular units (s^-1)."""
        return -2.0 * self.eig_slow.real

    @property
    def linewidth_hz(self) -> float:
        return self.linewidth_fwhm / (2.0 * math.pi)

    @property
    def center_offset(self) -> float:
        """Line centre relative to the atomic frequency, s^-1."""
        return self.eig_slow.imag

    def correlation(self, t) -> np.ndarray:
        """<a+(t) a(0)> for t >= 0."""
        t = np.asarray(t, dtype=float)
        w_slow, w_fast = self.weights
        if self.defective:
            return np.exp(self.eig_slow * t) * (w_slow + w_fast * t)
        return w_slow * np.exp(self.eig_slow * t) + w_fast * np.exp(self.eig_fast * t)


def build_qrt(params: SystemParams, steady, delta: float | None = None) -> QrtSystem:
    """Assemble the regression matrix and initial vector.

    ``steady`` is a :class:`SteadyReport` or a :class:`CumulantState`;
    ``delta`` defaults to ``params.detuning`` and enters as +i delta on the
    field entry.
    """
    state = steady.state if isinstance(steady, SteadyReport) else steady
    if delta is None:
        delta = params.detuning
    n, om = params.n_atoms, params.rabi
    m = np.array(
        [
            [-0.5 * params.kappa + 1j * delta, 0.5j * n * om],
            [-0.5j * om * state.inversion, -0.5 * dipole_relaxation(params)],
        ],
        dtype=complex,
    )
    initial = np.array([state.photons, np.conj(state.coherence)], dtype=complex)
    return QrtSystem(m, initial, params)


def decompose(qrt: QrtSystem, rtol: float = 1e-10) -> SpectrumResult:
    """Split <a+(t) a(0)> into two exponentials.

    At an exceptional point the matrix is defective and the solution takes
    the form exp(lambda t) (c0 + c1 t); that case is flagged, not rejected.
    """
    m, x0 = qrt.matrix, qrt.initial
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = np.sqrt(tr * tr / 4.0 - det + 0j)
    scale = max(abs(m[0, 0]), abs(m[1, 1]), 1e-300)
    lam = (tr / 2.0 + disc, tr / 2.0 - disc)
    if abs(disc) <= rtol * scale:
        lam0 = tr / 2.0
        c1 = ((m - lam0 * np.eye(2)) @ x0)[0]
        return SpectrumResult(lam0, lam0, (complex(x0[0]), complex(c1)), True, float(x0[0].real))
    lam_slow, lam_fast = sorted(lam, key=lambda z: -z.real)
    weights = []
    for lam_i, lam_j in ((lam_slow, lam_fast), (lam_fast, lam_slow)):
        # Projector onto the lam_i eigenspace: (M - lam_j) / (lam_i - lam_j).
        weights.append(complex((((m - lam_j * np.eye(2)) @ x0) / (lam_i - lam_j))[0]))
    return SpectrumResult(
        complex(lam_slow), complex(lam_fast), tuple(weights), False, float(x0[0].real)
    )


def linewidth(params: SystemParams, steady=None, delta: float | None = None) -> SpectrumResult:
    """Linewidth and line centre from the regression system.

    Without ``steady`` the resonant exact stationary state is used.
    """
    if steady is None:
        steady = steady_exact(params.replace(detuning=0.0))
    return decompose(build_qrt(params, steady, delta))


def pulling_curve(params: SystemParams, delta_grid, moments: str = "frozen", settle_tol: float = 1e-9):
    """Line centre and width versus cavity detuning.

    ``moments="frozen"`` keeps the resonant stationary moments for every
    detuning. ``moments="detuned"`` recomputes them at each detuning by
    integrating the detuned cumulant equations to stationarity, which lets
    the inversion readjust to the reduced cavity gain.

    Returns a list of ``(delta, center_offset, linewidth_fwhm)``.
    """
    if moments not in ("frozen", "detuned"):
        raise ValueError(f"unknown moments mode {moments!r}")
    resonant = params.replace(detuning=0.0)
    frozen = steady_exact(resonant).state
    rows = []
    for delta in delta_grid:
        delta = float(delta)
        if moments == "detuned" and delta != 0.0:
            state, _ = settle(params.replace(detuning=delta), tol=settle_tol, initial=frozen)
        else:
            state = frozen
        res = linewidth(resonant, state, delta=delta)
        rows.append((delta, res.center_offset, res.linewidth_fwhm))
    return rows


def spectrum_samples(result: SpectrumResult, omega_grid) -> np.ndarray:
    """Spectral density S(omega) = 2 Re int_0^inf exp(-i omega t) <a+(t) a(0)> dt.

    Normalised so that the integral over omega is 2 pi <a+ a>. Returns an
    array of shape (len(omega_grid), 2) holding (omega, S).
    """
    w = np.asarray(omega_grid, dtype=float)
    iw = 1j * w
    if result.defective:
        c0, c1 = result.weights
        lam = result.eig_slow
        s = c0 / (iw - lam) + c1 / (iw - lam) ** 2
    else:
        s = sum(
            wt / (1j * (w - lam.imag) + abs(lam.real))
            for wt, lam in zip(result.weights, (result.eig_slow, result.eig_fast))
        )
    return np.column_stack([w, 2.0 * np.real(s)])


def sampled_fwhm(omega: np.ndarray, density: np.ndarray) -> float:
    """FWHM of a sampled single peak by linear interpolation at half maximum."""
    i = int(np.argmax(density))
    half = density[i] / 2.0
    left = i
    while left > 0 and density[left] > half:
        left -= 1
    right = i
    while right < len(density) - 1 and density[right] > half:
        right += 1
    if density[left] > half or density[right] > half:
        raise ValueError("peak not resolved inside the sampled window")

    def cross(j0, j1):
        return omega[j0] + (half - density[j0]) * (omega[j1] - omega[j0]) / (density[j1] - density[j0])

    return cross(right - 1, right) - cross(left, left + 1)


def slow_branch(results: list[SpectrumResult], matrices: list[np.ndarray]) -> list[complex]:
    """Follow one eigenvalue branch through a sequence of regression matrices.

    Each step keeps the eigenvalue whose eigenvector overlaps most with the
    previously tracked one, so the sequence cannot hop between branches.
    """
    tracked = []
    prev_vec = None
    for res, m in zip(results, matrices):
        vals, vecs = np.linalg.eig(m)
        if prev_vec is None:
            k = int(np.argmin(np.abs(vals - res.eig_slow)))
        else:
            overlaps = np.abs(vecs.conj().T @ prev_vec)
            k = int(np.argmax(overlaps))
        prev_vec = vecs[:, k] / np.linalg.norm(vecs[:, k])
        tracked.append(complex(vals[k]))
    return tracked
