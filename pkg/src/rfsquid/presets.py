"""Circuit parameters of the eight geometric rf-SQUID qubits (A-H).

Energies are E/h in GHz, couplings are the coupling constant times the 0-1
matrix element at half flux (MHz), T1 in microseconds at half flux, flux
noise amplitude sqrt(A_phi) in micro-Phi_0. ``None`` marks values that were
not measured.
"""

from dataclasses import dataclass

from rfsquid.qubit import QubitParams


@dataclass(frozen=True)
class QubitRecord:
    name: str
    design: str
    turns: int
    pitch_um: float
    kappa_tot_mhz: float
    e_l: float
    e_c: float
    e_j: float
    phase_zpf: float
    gc_n_mhz: float
    gl_phi_mhz: float
    t1_us: float | None
    sqrt_a_phi: float | None

    def params(self, phi_ext: float = 0.5) -> QubitParams:
        return QubitParams(self.e_l, self.e_c, self.e_j, phi_ext)


_ROWS = [
    ("A", "2D", 74, 0.4, 1.7, 0.618, 2.75, 8.55, 1.73, 15, 0.1, 1.5, None),
    ("B", "2D", 74, 0.4, 0.63, 0.620, 3.15, 5.92, 1.78, 63, 140, 2.38, 317),
    ("C", "2D", 74, 0.4, 0.74, 0.619, 3.25, 5.41, 1.80, 69, 100, 3.29, 338),
    ("D", "2D", 74, 0.4, 0.62, 0.620, 3.83, 3.05, 1.88, 41, 210, 1.81, 787),
    ("E", "2D", 125, 0.3, 0.82, 0.205, 2.97, 4.89, 2.32, 6, 2, 9.62, 673),
    ("F", "2D", 125, 0.3, 0.95, 0.215, 3.40, 1.99, 2.42, 90, 7, 2.25, 646),
    ("G", "3D", 70, 0.3, 1.1, 0.78, 0.50, 3.15, 1.06, 17, 0, None, None),
    ("H", "3D", 25, 0.25, 0.95, 10.70, 0.54, 9.00, 0.56, 98, 0, None, None),
]

TABLE = {row[0]: QubitRecord(*row) for row in _ROWS}

# Parasitic coil mode of the qubit E/F coil, from the admittance fit.
PARASITIC_CIRCUIT = dict(c_q=4.8, l_q=530.0, c_p=0.47, l_p=1.3)
PARASITIC_MEASURED_GHZ = 6.73
PARASITIC_COUPLING_GHZ = 0.84

# Readout resonator of qubit C (number-splitting measurement).
QUBIT_C_RESONATOR_GHZ = 6.03


def preset(name: str) -> QubitRecord:
    """Look up ``"qubit-A"`` .. ``"qubit-H"`` (or just ``"A"``)."""
    key = name.removeprefix("qubit-").upper()
    try:
        return TABLE[key]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from qubit-A .. qubit-H") from None
