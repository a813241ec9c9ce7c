"""Single-mode rf-SQUID Hamiltonian in the harmonic-oscillator basis.

The Hamiltonian is

    H = 4 E_C n^2 + 1/2 E_L (phi - 2 pi phi_ext)^2 - E_J cos(phi)

with every energy given as E/h in GHz and ``phi_ext`` in units of the flux
quantum. The basis is the Fock basis of the linear part of H, i.e. of the LC
oscillator whose potential minimum sits at ``2 pi phi_ext``. Operator
convention, which fixes all matrix elements reported by this module::

    phi = 2 pi phi_ext + phi_zpf (a + a^dag)
    n   = i (a^dag - a) / (2 phi_zpf)          so that [phi, n] = i

with ``phi_zpf = (2 E_C / E_L) ** (1/4)``. The flux stays attached to the
inductive term; the displaced basis is only a choice of expansion point and
does not change the gauge. ``cos(phi)`` is built from the spectral
decomposition of the truncated phase operator, never from a series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np

from rfsquid.constants import FLUX_QUANTUM, GHZ, NANO, PLANCK

DEFAULT_DIM = 20
MAX_DIM = 160
DEFAULT_TOL = 1e-4  # GHz, i.e. 0.1 MHz on the lowest levels
N_CHECK_LEVELS = 5


class ConvergenceError(RuntimeError):
    """Raised when a truncated calculation cannot reach the requested accuracy."""


class DiagonalizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class QubitParams:
    """Circuit energies (GHz) and external flux (Phi_0) of an rf-SQUID."""

    e_l: float
    e_c: float
    e_j: float
    phi_ext: float = 0.0

    def __post_init__(self):
        for name in ("e_l", "e_c", "e_j", "phi_ext"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.e_l <= 0 or self.e_c <= 0:
            raise ValueError("e_l and e_c must be positive")
        if self.e_j < 0:
            raise ValueError("e_j must be non-negative")

    def at_flux(self, phi_ext: float) -> QubitParams:
        return replace(self, phi_ext=float(phi_ext))

    @property
    def phase_zpf(self) -> float:
        return phase_zpf(self)

    @property
    def plasma_frequency(self) -> float:
        """Frequency of the linear LC part, sqrt(8 E_L E_C), in GHz."""
        return math.sqrt(8.0 * self.e_l * self.e_c)


def critical_current_to_ej(i_c: float) -> float:
    """Josephson energy E_J/h in GHz for a critical current ``i_c`` in nA."""
    if i_c == 0:
        return 0.0
    if not i_c > 0:
        raise ValueError("critical current must be positive")
    return i_c * NANO * FLUX_QUANTUM / (2 * math.pi) / PLANCK / GHZ


def phase_zpf(params: QubitParams) -> float:
    """Zero-point phase fluctuation (2 E_C / E_L) ** (1/4) of the linear circuit."""
    return (2.0 * params.e_c / params.e_l) ** 0.25


@dataclass(frozen=True)
class OperatorSet:
    """Truncated operators in the displaced oscillator basis.

    ``phi_op`` is the phase measured from the inductive minimum,
    phi - 2 pi phi_ext = phi_zpf (a + a^dag); it is traceless. The full phase
    operator is ``full_phi_op``. ``cos_phi_op`` is cos of the full phase.
    """

    dim: int
    n_op: np.ndarray
    phi_op: np.ndarray
    cos_phi_op: np.ndarray
    phase_offset: float = 0.0

    @property
    def full_phi_op(self) -> np.ndarray:
        return self.phi_op + self.phase_offset * np.eye(self.dim)


@lru_cache(maxsize=32)
def _position_eigensystem(dim: int):
    """Eigen-decomposition of the truncated (a + a^dag); flux and energy independent."""
    off = np.sqrt(np.arange(1, dim))
    x = np.diag(off, 1) + np.diag(off, -1)
    nodes, vecs = np.linalg.eigh(x)
    nodes.setflags(write=False)
    vecs.setflags(write=False)
    return nodes, vecs


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1)


def _cos_phase(params: QubitParams, dim: int) -> np.ndarray:
    nodes, vecs = _position_eigensystem(dim)
    theta = 2 * math.pi * params.phi_ext + phase_zpf(params) * nodes
    c = (vecs * np.cos(theta)) @ vecs.T
    return 0.5 * (c + c.T)  # exact symmetry, not just to rounding


def build_operators(params: QubitParams, dim: int) -> OperatorSet:
    if dim < 2:
        raise ValueError("dim must be at least 2")
    zpf = phase_zpf(params)
    a = _ladder(dim)
    phi_op = zpf * (a + a.T)
    n_op = 1j * (a.T - a) / (2 * zpf)
    return OperatorSet(
        dim=dim,
        n_op=n_op,
        phi_op=phi_op,
        cos_phi_op=_cos_phase(params, dim),
        phase_offset=2 * math.pi * params.phi_ext,
    )


def hamiltonian(params: QubitParams, dim: int) -> np.ndarray:
    """Real symmetric H in the displaced Fock basis (GHz).

    The linear part is diagonal in its own eigenbasis, so it enters exactly as
    sqrt(8 E_L E_C) (k + 1/2) rather than through products of truncated matrices.
    """
    k = np.arange(dim)
    h = np.diag(params.plasma_frequency * (k + 0.5))
    if params.e_j:
        h = h - params.e_j * _cos_phase(params, dim)
    return h


def _fix_order_and_sign(energies, vecs, tie_tol=1e-12):
    """Break exact ties by dominant basis index and make the dominant entry positive."""
    dominant = np.argmax(np.abs(vecs), axis=0)
    scale = max(1.0, float(np.max(np.abs(energies))))
    idx = list(range(len(energies)))
    start = 0
    while start < len(idx):
        stop = start + 1
        while stop < len(idx) and energies[stop] - energies[start] <= tie_tol * scale:
            stop += 1
        if stop - start > 1:
            idx[start:stop] = sorted(range(start, stop), key=lambda m: dominant[m])
        start = stop
    energies, vecs, dominant = energies[idx], vecs[:, idx], dominant[idx]
    signs = np.sign(vecs[dominant, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return energies, vecs * signs


def _eigh(h: np.ndarray):
    try:
        energies, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        finite = bool(np.all(np.isfinite(h)))
        cond = float(np.linalg.cond(h)) if finite else float("nan")
        raise DiagonalizationError(
            f"eigensolver failed (finite entries: {finite}, condition number: {cond:.3e})"
        ) from exc
    return _fix_order_and_sign(energies, vecs)


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues (GHz, ascending) and eigenvectors of the qubit Hamiltonian.

    ``converged`` is None when no doubling check was made.
    """

    params: QubitParams
    dim: int
    energies: np.ndarray
    eigenvectors: np.ndarray
    converged: bool | None = None
    convergence_error: float | None = field(default=None, compare=False)

    @cached_property
    def transitions(self) -> dict[tuple[int, int], float]:
        e = self.energies
        return {
            (i, j): float(e[j] - e[i]) for i in range(len(e)) for j in range(i + 1, len(e))
        }

    def transition(self, i: int, j: int) -> float:
        _check_levels(i, j, self.dim)
        return float(self.energies[j] - self.energies[i])

    def operator_in_eigenbasis(self, operator: str) -> np.ndarray:
        """<i|O|j> over all computed eigenstates.

        ``operator`` is "n", "phi" (full phase) or "phi_fluct" (phase minus 2 pi phi_ext).
        """
        ops = build_operators(self.params, self.dim)
        if operator == "n":
            mat = ops.n_op
        elif operator == "phi":
            mat = ops.full_phi_op
        elif operator == "phi_fluct":
            mat = ops.phi_op
        else:
            raise ValueError(f"unknown operator {operator!r}; expected 'n' or 'phi'")
        v = self.eigenvectors
        return v.conj().T @ mat @ v


def _check_levels(i, j, dim):
    if not (0 <= i < dim and 0 <= j < dim):
        raise IndexError(f"levels ({i}, {j}) outside basis of size {dim}")


def _solve(params: QubitParams, dim: int):
    return _eigh(hamiltonian(params, dim))


def diagonalize(
    params: QubitParams,
    dim: int | None = None,
    *,
    tol: float = DEFAULT_TOL,
    max_dim: int = MAX_DIM,
    check_convergence: bool | None = None,
) -> SpectrumResult:
    """Diagonalize the qubit Hamiltonian.

    With ``dim=None`` the basis starts at ``DEFAULT_DIM`` and doubles until the
    lowest five energies move by less than ``tol`` GHz (or ``max_dim`` is hit,
    in which case ``converged`` is False). With an explicit ``dim`` the
    doubling check runs only if ``check_convergence`` is true.
    """
    if dim is not None:
        if dim < 2:
            raise ValueError("dim must be at least 2")
        energies, vecs = _solve(params, dim)
        if not check_convergence:
            return SpectrumResult(params, dim, energies, vecs)
        e2, _ = _solve(params, 2 * dim)
        k = min(N_CHECK_LEVELS, dim)
        err = float(np.max(np.abs(e2[:k] - energies[:k])))
        return SpectrumResult(params, dim, energies, vecs, err < tol, err)

    d = DEFAULT_DIM
    energies, vecs = _solve(params, d)
    while True:
        if 2 * d > max_dim:
            return SpectrumResult(params, d, energies, vecs, False, None)
        e2, v2 = _solve(params, 2 * d)
        err = float(np.max(np.abs(e2[:N_CHECK_LEVELS] - energies[:N_CHECK_LEVELS])))
        d, energies, vecs = 2 * d, e2, v2
        if err < tol:
            return SpectrumResult(params, d, energies, vecs, True, err)


def converged_dim(params: QubitParams, tol: float = DEFAULT_TOL, max_dim: int = MAX_DIM) -> int:
    return diagonalize(params, tol=tol, max_dim=max_dim).dim


def transition_frequency(params: QubitParams, i: int, j: int, dim: int | None = None) -> float:
    if not 0 <= i < j:
        raise IndexError("need 0 <= i < j")
    spec = diagonalize(params, dim)
    _check_levels(i, j, spec.dim)
    return spec.transition(i, j)


def matrix_element(params: QubitParams, operator: str, i: int, j: int, dim: int | None = None) -> float:
    """|<i|O|j>| between qubit eigenstates, O being ``"n"`` or ``"phi"``."""
    spec = diagonalize(params, dim)
    _check_levels(i, j, spec.dim)
    if operator not in ("n", "phi"):
        raise ValueError(f"unknown operator {operator!r}; expected 'n' or 'phi'")
    return float(abs(spec.operator_in_eigenbasis(operator)[i, j]))


def hermite_functions(x: np.ndarray, n: int) -> np.ndarray:
    """Normalized Hermite functions h_0..h_{n-1} at ``x``, shape (n, len(x))."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n, x.size))
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x**2)
    if n > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def default_phase_grid(params: QubitParams, n_points: int = 4001, half_width: float = 8 * math.pi):
    return 2 * math.pi * params.phi_ext + np.linspace(-half_width, half_width, n_points)


def _ground_density(spec: SpectrumResult, phi_grid: np.ndarray) -> np.ndarray:
    params = spec.params
    zpf = phase_zpf(params)
    # phi - 2 pi phi_ext = sqrt(2) zpf x, x being the dimensionless oscillator coordinate
    x = (phi_grid - 2 * math.pi * params.phi_ext) / (math.sqrt(2.0) * zpf)
    basis = hermite_functions(x, spec.dim) / math.sqrt(math.sqrt(2.0) * zpf)
    return np.abs(spec.eigenvectors[:, 0] @ basis) ** 2


def ground_state_phase_pdf(params: QubitParams, dim: int | None = None, phi_grid=None):
    """Ground-state probability density |psi_0(phi)|^2 on a phase grid.

    Returns ``(phi_grid, pdf)``. The grid must cover 2 pi phi_ext +/- 6 pi;
    the raw density has to integrate to one within 1e-6 (trapezoid rule)
    before it is renormalized.
    """
    if phi_grid is None:
        phi_grid = default_phase_grid(params)
    phi_grid = np.asarray(phi_grid, dtype=float)
    center = 2 * math.pi * params.phi_ext
    if phi_grid.min() > center - 6 * math.pi or phi_grid.max() < center + 6 * math.pi:
        raise ValueError("phase grid must span at least 6 pi on each side of 2 pi phi_ext")
    pdf = _ground_density(diagonalize(params, dim), phi_grid)
    norm = float(np.trapezoid(pdf, phi_grid))
    if abs(norm - 1.0) > 1e-6:
        raise ConvergenceError(f"ground-state density integrates to {norm:.9f}, not 1")
    return phi_grid, pdf / norm


def delocalization_probability(params: QubitParams, dim: int | None = None, n_points: int = 4001) -> float:
    """Probability that the ground-state phase lies more than pi from the inductive minimum.

    The phase is measured from 2 pi phi_ext, i.e. this is P(|phi| > pi) in the
    gauge where the external flux sits on the junction term. Computed as one
    minus the integral over the central window so the window edges fall on
    grid points.
    """
    spec = diagonalize(params, dim)
    # validates normalization on the full grid
    ground_state_phase_pdf(params, spec.dim)
    center = 2 * math.pi * params.phi_ext
    window = np.linspace(center - math.pi, center + math.pi, n_points)
    inside = float(np.trapezoid(_ground_density(spec, window), window))
    return float(np.clip(1.0 - inside, 0.0, 1.0))


def energies(params: QubitParams, dim: int, n_levels: int | None = None) -> np.ndarray:
    """Eigenvalues only (GHz), lowest ``n_levels``; the fast path used by fitting."""
    return np.linalg.eigvalsh(hamiltonian(params, dim))[:n_levels]
