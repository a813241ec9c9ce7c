"""Regime classification of rf-SQUID qubits.

The characteristic impedance follows from E_C = e^2/2C and
E_L = (Phi_0/2pi)^2/L::

    Z_C = sqrt(L/C) = (hbar / 2 e^2) sqrt(2 E_C / E_L) = (R_Q / pi) sqrt(2 E_C / E_L)

with R_Q = h/(2e)^2. A qubit is "heavy" when E_J/E_C > 1 and "high impedance"
when Z_C >= R_Q; points exactly on a boundary go to the heavy and the high
impedance side.
"""

import math
from dataclasses import asdict, dataclass

from rfsquid.constants import RESISTANCE_QUANTUM
from rfsquid.qubit import QubitParams, phase_zpf

FLUX = "flux"
FLUXONIUM = "fluxonium"
QUASI_CHARGE = "quasi-charge"
WEAKLY_ANHARMONIC = "weakly-anharmonic"


@dataclass(frozen=True)
class RegimeReport:
    ratio_ej_ec: float
    ratio_el_ec: float
    z_c: float
    z_c_over_rq: float
    phase_zpf: float
    label: str

    def to_dict(self):
        return asdict(self)


def characteristic_impedance(params: QubitParams) -> float:
    """Z_C in ohm."""
    return RESISTANCE_QUANTUM / math.pi * math.sqrt(2.0 * params.e_c / params.e_l)


def regime_label(ratio_ej_ec: float, z_c_over_rq: float) -> str:
    heavy = ratio_ej_ec >= 1.0
    high_z = z_c_over_rq >= 1.0
    if heavy:
        return FLUXONIUM if high_z else FLUX
    return QUASI_CHARGE if high_z else WEAKLY_ANHARMONIC


def classify(params: QubitParams) -> RegimeReport:
    z_c = characteristic_impedance(params)
    ratio_ej_ec = params.e_j / params.e_c
    return RegimeReport(
        ratio_ej_ec=ratio_ej_ec,
        ratio_el_ec=params.e_l / params.e_c,
        z_c=z_c,
        z_c_over_rq=z_c / RESISTANCE_QUANTUM,
        phase_zpf=phase_zpf(params),
        label=regime_label(ratio_ej_ec, z_c / RESISTANCE_QUANTUM),
    )
