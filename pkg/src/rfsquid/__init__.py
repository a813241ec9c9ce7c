"""Spectra, classification, fitting and loss models for single-junction rf-SQUID qubits."""

from rfsquid.coupled import CoupledParams, ParasiticParams
from rfsquid.fitting import FitOptions, FitResult, fit_coupling_params, fit_pipeline, fit_qubit_params
from rfsquid.qubit import QubitParams, diagonalize

__version__ = "0.1.0"

__all__ = [
    "CoupledParams",
    "FitOptions",
    "FitResult",
    "ParasiticParams",
    "QubitParams",
    "diagonalize",
    "fit_coupling_params",
    "fit_pipeline",
    "fit_qubit_params",
]
