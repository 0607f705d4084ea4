"""Physical parameters of the bad-cavity laser and closed-form predictors.

All rates are angular frequencies in s^-1. Conversion to Hz happens only in
reporting code and is always labelled there.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .constants import (
    BOHR_RADIUS,
    ELEMENTARY_CHARGE,
    EPSILON_0,
    HBAR,
    SPEED_OF_LIGHT,
    SR87_CLOCK_WAVELENGTH,
    SR87_OMEGA_A,
)
from .errors import ParameterError

__all__ = [
    "SystemParams",
    "CavityGeometry",
    "DerivedParams",
    "cooperativity",
    "saturated_inversion",
    "dipole_relaxation",
    "rabi_from_geometry",
    "kappa_from_geometry",
    "derive",
    "sr87_params",
    "sr87_geometry",
]


@dataclass(frozen=True)
class SystemParams:
    """Full parameter set of the atom-cavity model.

    Parameters
    ----------
    n_atoms : int
        Number of atoms N.
    gamma : float
        Spontaneous decay rate of the clock transition.
    pump : float
        Effective incoherent repump rate w.
    t2_inv : float
        Inhomogeneous dipole dephasing rate 1/T2.
    kappa : float
        Cavity energy decay rate (linewidth).
    rabi : float
        Single-atom vacuum Rabi frequency.
    detuning : float
        Cavity minus atom frequency, omega_c - omega_a.
    omega_a : float
        Atomic transition angular frequency; only enters the output power.

    Violations of the bad-cavity ordering (kappa above every atomic rate)
    are recorded in ``regime_warnings`` rather than rejected.
    """

    n_atoms: int
    gamma: float
    pump: float
    t2_inv: float
    kappa: float
    rabi: float
    detuning: float = 0.0
    omega_a: float = SR87_OMEGA_A
    regime_warnings: tuple = field(default=(), init=False, compare=False)

    def __post_init__(self):
        n = self.n_atoms
        if isinstance(n, float) and n.is_integer():
            object.__setattr__(self, "n_atoms", int(n))
        if not isinstance(self.n_atoms, int) or isinstance(self.n_atoms, bool):
            raise ParameterError(f"n_atoms must be an integer, got {n!r}")
        checks = [
            (self.n_atoms >= 1, "n_atoms must be >= 1"),
            (self.gamma > 0, "gamma must be > 0"),
            (self.kappa > 0, "kappa must be > 0"),
            (self.rabi >= 0, "rabi must be >= 0"),
            (self.pump >= 0, "pump must be >= 0"),
            (self.t2_inv >= 0, "t2_inv must be >= 0"),
            (self.omega_a > 0, "omega_a must be > 0"),
            (math.isfinite(self.detuning), "detuning must be finite"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ParameterError(msg)
        warnings = tuple(
            f"kappa <= {name}"
            for name in ("gamma", "pump", "t2_inv")
            if self.kappa <= getattr(self, name)
        )
        object.__setattr__(self, "regime_warnings", warnings)

    @property
    def bad_cavity(self) -> bool:
        return not self.regime_warnings

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def scaled(self, factor: float) -> "SystemParams":
        """All rates multiplied by ``factor``; cooperativity is unchanged."""
        return self.replace(
            gamma=self.gamma * factor,
            pump=self.pump * factor,
            t2_inv=self.t2_inv * factor,
            kappa=self.kappa * factor,
            rabi=self.rabi * factor,
            detuning=self.detuning * factor,
        )

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.init}


@dataclass(frozen=True)
class CavityGeometry:
    """Cavity and transition data used to derive the coupling constants."""

    mode_volume: float  # m^3
    finesse: float
    cavity_length: float  # m
    dipole_moment: float  # C m
    wavelength: float  # m

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if not getattr(self, f.name) > 0:
                raise ParameterError(f"{f.name} must be > 0")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * SPEED_OF_LIGHT / self.wavelength


@dataclass(frozen=True)
class DerivedParams:
    cooperativity: float
    d0: float
    gamma_perp: float
    w_max: float
    w_opt: float
    n_crit: float
    p_max: float  # W
    linewidth_floor: float


def cooperativity(rabi: float, kappa: float, gamma: float) -> float:
    """Single-atom cooperativity ``rabi**2 / (kappa * gamma)``."""
    if not (rabi > 0 and kappa > 0 and gamma > 0):
        raise ParameterError("cooperativity needs rabi, kappa, gamma > 0")
    return rabi**2 / (kappa * gamma)


def _cooperativity(params: SystemParams) -> float:
    # Unlike cooperativity(), a decoupled system (rabi = 0) is allowed here.
    return params.rabi**2 / (params.kappa * params.gamma)


def saturated_inversion(pump: float, gamma: float) -> float:
    """Inversion reached by pumping and decay alone, (w - gamma)/(w + gamma)."""
    return (pump - gamma) / (pump + gamma)


def dipole_relaxation(params: SystemParams) -> float:
    """Total atomic dipole relaxation rate gamma + w + 2/T2."""
    return params.gamma + params.pump + 2.0 * params.t2_inv


def rabi_from_geometry(geom: CavityGeometry) -> float:
    """Vacuum Rabi frequency d * sqrt(omega_c / (2 hbar eps0 V)).

    The dipole moment multiplies the vacuum field amplitude; without it the
    expression does not carry units of s^-1.
    """
    return geom.dipole_moment * math.sqrt(
        geom.omega / (2.0 * HBAR * EPSILON_0 * geom.mode_volume)
    )


def kappa_from_geometry(geom: CavityGeometry) -> float:
    """Cavity energy decay rate pi c / (L F), i.e. 2 pi * FSR / F."""
    return math.pi * SPEED_OF_LIGHT / (geom.cavity_length * geom.finesse)


def derive(params: SystemParams) -> DerivedParams:
    """Closed-form predictions for ``params``.

    ``n_crit`` and ``w_max`` are the leading-order expressions valid for
    gamma*T2 << 1 and N >> n_crit; exact threshold locations come from
    :func:`srlaser.steady.thresholds_empirical`.
    """
    c = _cooperativity(params)
    gamma = params.gamma
    n = params.n_atoms
    w_max = n * c * gamma
    n_crit = 2.0 * params.t2_inv / (c * gamma) if c > 0 else math.inf
    return DerivedParams(
        cooperativity=c,
        d0=saturated_inversion(params.pump, gamma),
        gamma_perp=dipole_relaxation(params),
        w_max=w_max,
        w_opt=w_max / 2.0,
        n_crit=n_crit,
        p_max=HBAR * params.omega_a * n**2 * c * gamma / 8.0,
        linewidth_floor=c * gamma,
    )


def sr87_geometry() -> CavityGeometry:
    """1 mm cavity, 50 um waist, finesse 1e6, 87Sr clock line."""
    return CavityGeometry(
        mode_volume=1e-3 * math.pi * (50e-6) ** 2,
        finesse=1e6,
        cavity_length=1e-3,
        dipole_moment=1e-5 * ELEMENTARY_CHARGE * BOHR_RADIUS,
        wavelength=SR87_CLOCK_WAVELENGTH,
    )


def sr87_params(pump: float | None = None, n_atoms: int = 1_000_000, **changes) -> SystemParams:
    """87Sr lattice example: gamma = 0.01, 1/T2 = 1, rabi = 37, kappa = 9.4e5.

    ``pump`` defaults to the optimal pump rate N C gamma / 2.
    """
    base = dict(
        n_atoms=n_atoms,
        gamma=0.01,
        pump=0.0,
        t2_inv=1.0,
        kappa=9.4e5,
        rabi=37.0,
    )
    base.update(changes)
    p = SystemParams(**base)
    if pump is None:
        pump = derive(p).w_opt
    return p.replace(pump=pump)
