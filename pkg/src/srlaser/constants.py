"""Physical constants (CODATA 2018), SI units."""

import math

HBAR = 1.054571817e-34  # J s
EPSILON_0 = 8.8541878128e-12  # F / m
ELEMENTARY_CHARGE = 1.602176634e-19  # C
BOHR_RADIUS = 5.29177210903e-11  # m
SPEED_OF_LIGHT = 299792458.0  # m / s

SR87_CLOCK_WAVELENGTH = 698e-9  # m, 1S0 - 3P0
SR87_OMEGA_A = 2.0 * math.pi * SPEED_OF_LIGHT / SR87_CLOCK_WAVELENGTH  # rad / s
