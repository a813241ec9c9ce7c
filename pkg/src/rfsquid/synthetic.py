"""Synthetic datasets generated from known parameters, for round-trip checks."""

import numpy as np

from rfsquid import coupled, qubit
from rfsquid.datasets import QUBIT_LINE, RESONATOR_LINE, SpectroscopyDataset, SpectroscopyPoint


def qubit_dataset(params, flux_values, transitions=((0, 1), (0, 2)), noise=0.0, seed=None, labelled=True):
    """Bare-qubit transition frequencies at every flux, with optional Gaussian noise (GHz)."""
    rng = np.random.default_rng(seed)
    points = []
    for phi in flux_values:
        spec = qubit.diagonalize(params.at_flux(phi))
        for i, j in transitions:
            f = spec.transition(i, j) + (rng.normal(0.0, noise) if noise else 0.0)
            points.append(SpectroscopyPoint(float(phi), float(f), f"q:{i}-{j}" if labelled else "unassigned"))
    return SpectroscopyDataset(points, {"source": "synthetic"})


def coupled_dataset(p, flux_values, labels=((0, 1), (1, 0)), noise=0.0, seed=None):
    """Dressed lines of the coupled model; (0, 1) is the resonator line,
    (j, k) the qubit line to level j with k photons."""
    rng = np.random.default_rng(seed)
    points = []
    for phi in flux_values:
        lv = coupled.dressed_levels(p.at_flux(phi))
        for j, k in labels:
            f = lv.line((j, k))
            if not np.isfinite(f):
                continue
            f += rng.normal(0.0, noise) if noise else 0.0
            if (j, k) == (0, 1):
                points.append(SpectroscopyPoint(float(phi), float(f), "r:disp", 1.0, RESONATOR_LINE))
            else:
                tag = f"q:0-{j}" + (f"+{k}ph" if k else "")
                points.append(SpectroscopyPoint(float(phi), float(f), tag, 1.0, QUBIT_LINE))
    return SpectroscopyDataset(points, {"source": "synthetic", "omega_r": p.omega_r})
