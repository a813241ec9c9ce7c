"""Physical constants (CODATA 2018, exact or 12 significant digits) and unit helpers.

All SI conversions in the package go through this module. Energies are carried
as frequencies E/h in GHz everywhere else.
"""

import math

E_CHARGE = 1.602176634e-19  # C, exact
PLANCK = 6.62607015e-34  # J s, exact
HBAR = PLANCK / (2 * math.pi)
BOLTZMANN = 1.380649e-23  # J/K, exact
FLUX_QUANTUM = PLANCK / (2 * E_CHARGE)  # Wb
RESISTANCE_QUANTUM = PLANCK / (2 * E_CHARGE) ** 2  # h/(2e)^2, ~6453.2 Ohm

GHZ = 1e9
MHZ = 1e6
FEMTO = 1e-15
NANO = 1e-9
MICRO = 1e-6


def energy_to_ghz(joules):
    return joules / PLANCK / GHZ


def ghz_to_joules(ghz):
    return ghz * GHZ * PLANCK


def capacitance_from_ec(e_c):
    """Capacitance in farad for a charging energy ``e_c`` (GHz), from E_C = e^2/2C."""
    return E_CHARGE**2 / (2 * ghz_to_joules(e_c))


def ec_from_capacitance(c):
    return energy_to_ghz(E_CHARGE**2 / (2 * c))


def inductance_from_el(e_l):
    """Inductance in henry for an inductive energy ``e_l`` (GHz), from E_L = (Phi0/2pi)^2/L."""
    return (FLUX_QUANTUM / (2 * math.pi)) ** 2 / ghz_to_joules(e_l)


def el_from_inductance(ind):
    return energy_to_ghz((FLUX_QUANTUM / (2 * math.pi)) ** 2 / ind)
