"""Regenerate the synthetic example datasets in ``data/``.

Every file is produced from the named parameter sets with fixed seeds, so
running this script again reproduces the shipped files exactly.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from rfsquid import coupled, datasets, noise, presets
from rfsquid.datasets import QUBIT_LINE, RESONATOR_LINE, SpectroscopyDataset, SpectroscopyPoint

SEED = 20240611


def spectroscopy_b(out: Path):
    """Qubit B with its readout resonator: dressed qubit lines 0-1, 0-2 (5 MHz
    noise) and the resonator line (0.2 MHz noise) over half a flux period.
    Weights are inverse variances relative to the qubit lines."""
    rec = presets.TABLE["B"]
    q = rec.params(0.0)
    omega_r = 6.0
    g_c, g_l = coupled.couplings_from_products(rec.params(0.5), rec.gc_n_mhz / 1e3, rec.gl_phi_mhz / 1e3)
    p = coupled.CoupledParams(q, omega_r, g_c, g_l)
    rng = np.random.default_rng(SEED)
    points = []
    for phi in np.linspace(0.0, 0.5, 14):
        lv = coupled.dressed_levels(p.at_flux(phi))
        for (j, k), tag, kind in (((1, 0), "q:0-1", QUBIT_LINE), ((2, 0), "q:0-2", QUBIT_LINE), ((0, 1), "r:disp", RESONATOR_LINE)):
            f = lv.line((j, k))
            if np.isfinite(f):
                sigma = 5e-3 if kind == QUBIT_LINE else 2e-4
                weight = (5e-3 / sigma) ** 2
                points.append(SpectroscopyPoint(float(phi), float(f + rng.normal(0, sigma)), tag, weight, kind))
    meta = {"source": "synthetic qubit-B", "omega_r": omega_r, "g_c": g_c, "g_l": g_l, "e_l": rec.e_l, "e_c": rec.e_c, "e_j": rec.e_j}
    datasets.write_spectroscopy_csv(SpectroscopyDataset(points, meta), out / "qubit_B_spectroscopy.csv")


def coherence(out: Path):
    """T1 and echo T2 against flux for qubits E and F around half flux.

    Q_diel 57e3 (E) and 25e3 (F) at 60 mK and 80 mK respectively; sqrt(A_Phi)
    673 and 646 micro-Phi_0 with shot-noise times 30.0 and 6.2 us.
    """
    rng = np.random.default_rng(SEED + 1)
    settings = {"E": (57_000, 0.060, 673.0, 30.0), "F": (25_000, 0.080, 646.0, 6.2)}
    for name, (q_diel, temp, a_phi, t_phi) in settings.items():
        q = presets.TABLE[name].params(0.5)
        flux = np.round(np.linspace(0.46, 0.54, 17), 6)
        t1 = np.array([noise.t1_capacitive(q, f, noise.T1Model(q_diel, temp)) for f in flux])
        t1_meas = t1 * np.exp(rng.normal(0, 0.05, flux.size))
        datasets.write_coherence_csv(out / f"qubit_{name}_t1.csv", flux, t1_meas, 0.05 * t1_meas)
        slopes = [noise.flux_slope(q, f)[0] for f in flux]
        # T2 is generated against the measured T1 so that the shipped pair is self-consistent
        t2 = noise.clamped_t2(slopes, t1_meas, noise.T2Model(a_phi, 1.0, t_phi))
        t2_meas = t2 * (1 + rng.normal(0, 0.01, flux.size))
        datasets.write_coherence_csv(out / f"qubit_{name}_t2.csv", flux, t2_meas, 0.01 * t2_meas)


def number_splitting(out: Path):
    """Photon-number-split 0-1 line of qubit C at half flux for three drive powers."""
    rec = presets.TABLE["C"]
    q = rec.params(0.5)
    g_c, g_l = coupled.couplings_from_products(q, rec.gc_n_mhz / 1e3, rec.gl_phi_mhz / 1e3)
    p = coupled.CoupledParams(q, presets.QUBIT_C_RESONATOR_GHZ, g_c, g_l)
    chi = coupled.dispersive_shift(p)
    f0 = coupled.number_resolved_lines(p, 1)[0]
    rng = np.random.default_rng(SEED + 2)
    freq = np.round(np.linspace(f0 - 0.09, f0 + 0.02, 551), 9)
    powers = [-30.0, -25.0, -20.0]
    for power, n_bar in zip(powers, (0.05, 0.3, 1.0)):
        model = noise.NumberSplitModel(n_bar, 2 * chi, 3.0, f0, 1.0)
        y = noise.number_split_lineshape(freq, model) + rng.normal(0, 0.01, freq.size)
        datasets.write_trace_csv(out / f"qubit_C_numbersplit_m{int(-power)}dBm.csv", freq, y)
    meta = {"omega_r": presets.QUBIT_C_RESONATOR_GHZ, "g_c": g_c, "g_l": g_l, "chi_mhz": chi, "f0_ghz": f0, "powers_dbm": powers}
    (out / "qubit_C_numbersplit.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def admittance(out: Path):
    """Coil admittance for the lumped circuit values, 0.1 % relative noise."""
    pp = coupled.ParasiticParams(**presets.PARASITIC_CIRCUIT)
    freq = np.round(np.linspace(1.0, 10.0, 361), 9)
    y = coupled.admittance(freq, pp)
    rng = np.random.default_rng(SEED + 3)
    y = y * (1 + rng.normal(0, 1e-3, freq.size))
    datasets.write_admittance_csv(out / "coil_admittance.csv", freq, y)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    out = Path(parser.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)
    spectroscopy_b(out)
    coherence(out)
    number_splitting(out)
    admittance(out)


if __name__ == "__main__":
    main()
