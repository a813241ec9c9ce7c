"""Qubit-resonator (and optional parasitic-mode) Hamiltonians.

The qubit sector is diagonalized first and truncated to ``n_qubit_levels``
eigenstates; the resonator is a Fock space of ``n_photons`` states. In GHz::

    H = H_q + w_r a^dag a - i g_c n (a - a^dag) - g_l phi_L (a + a^dag)

``phi_L = phi - 2 pi phi_ext`` is the phase across the inductor, i.e. the
loop current in units of E_L. Its off-diagonal elements in the qubit
eigenbasis equal those of the full phase; dropping the constant part only
removes a qubit-state-independent drive on the resonator.

Product-state index order is qubit-major: ``index = i * n_photons + k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rfsquid.qubit import QubitParams, diagonalize

HERMITICITY_TOL = 1e-10
LABEL_THRESHOLD = 0.5
MAX_TOTAL_DIM = 4000


class HermiticityError(RuntimeError):
    """An assembled Hamiltonian is not Hermitian; indicates a construction bug."""


class LabelingError(RuntimeError):
    """Dressed states could not be matched to product states."""


@dataclass(frozen=True)
class CoupledParams:
    """Qubit plus readout resonator; frequencies and couplings in GHz."""

    qubit: QubitParams
    omega_r: float
    g_c: float = 0.0
    g_l: float = 0.0
    n_photons: int = 5
    n_qubit_levels: int = 20
    qubit_dim: int | None = None

    def __post_init__(self):
        if not self.omega_r > 0:
            raise ValueError("omega_r must be positive")
        if self.n_photons < 2 or self.n_qubit_levels < 2:
            raise ValueError("truncations must be at least 2")
        if not (math.isfinite(self.g_c) and math.isfinite(self.g_l)):
            raise ValueError("couplings must be finite")

    def at_flux(self, phi_ext: float) -> CoupledParams:
        return _replace(self, qubit=self.qubit.at_flux(phi_ext))


def _replace(obj, **kw):
    from dataclasses import replace

    return replace(obj, **kw)


@dataclass(frozen=True)
class QubitSector:
    """Qubit eigenenergies and operators restricted to the lowest levels."""

    energies: np.ndarray
    n_op: np.ndarray
    phi_op: np.ndarray

    @property
    def size(self) -> int:
        return len(self.energies)


def qubit_sector(qubit: QubitParams, n_levels: int, dim: int | None = None) -> QubitSector:
    if dim is not None and dim < n_levels:
        raise ValueError("qubit basis smaller than the number of kept levels")
    spec = diagonalize(qubit, dim)
    if spec.dim < n_levels:
        spec = diagonalize(qubit, n_levels)
    keep = slice(0, n_levels)
    return QubitSector(
        energies=spec.energies[keep],
        n_op=spec.operator_in_eigenbasis("n")[keep, keep],
        phi_op=spec.operator_in_eigenbasis("phi_fluct")[keep, keep],
    )


def _annihilation(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def check_hermitian(h: np.ndarray, tol: float = HERMITICITY_TOL):
    scale = max(float(np.max(np.abs(h))), 1e-300)
    dev = float(np.max(np.abs(h - h.conj().T))) / scale
    if dev > tol:
        raise HermiticityError(f"assembled Hamiltonian not Hermitian (relative deviation {dev:.2e})")


def _assemble(sector: QubitSector, omega_r, g_c, g_l, n_photons, parasitic=None) -> np.ndarray:
    nq = sector.size
    a = _annihilation(n_photons)
    eye_r = np.eye(n_photons)
    h = np.kron(np.diag(sector.energies), eye_r) + np.kron(np.eye(nq), omega_r * (a.T @ a))
    if g_c:
        # -i n is real antisymmetric times (a - a^dag) real antisymmetric: real symmetric
        h = h + g_c * np.real(np.kron(-1j * sector.n_op, a - a.T))
    if g_l:
        h = h - g_l * np.kron(np.real(sector.phi_op), a + a.T)
    if parasitic is not None:
        omega_p, g_p, n_par = parasitic
        b = _annihilation(n_par)
        eye_p = np.eye(n_par)
        h = np.kron(h, eye_p) + np.kron(np.eye(nq * n_photons), omega_p * (b.T @ b))
        if g_p:
            h = h + g_p * np.kron(np.kron(sector.n_op, eye_r), b + b.T)
    check_hermitian(h)
    return h


def build_coupled_hamiltonian(p: CoupledParams, sector: QubitSector | None = None) -> np.ndarray:
    """Full qubit-resonator matrix (GHz), real symmetric."""
    if sector is None:
        sector = qubit_sector(p.qubit, p.n_qubit_levels, p.qubit_dim)
    return _assemble(sector, p.omega_r, p.g_c, p.g_l, p.n_photons)


@dataclass(frozen=True)
class ParasiticParams:
    """Lumped circuit of the coil: qubit branch C_q (fF) || L_q (nH) in parallel
    with a series L_p (uH) - C_p (fF) branch. ``e_j`` (GHz) is optional."""

    c_q: float
    l_q: float
    c_p: float
    l_p: float
    e_j: float | None = None

    def __post_init__(self):
        for name in ("c_q", "l_q", "c_p", "l_p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.e_j is not None and not self.e_j > 0:
            raise ValueError("e_j must be positive")

    @property
    def series_capacitance(self) -> float:
        """(C_p^-1 + C_q^-1)^-1 in fF."""
        return 1.0 / (1.0 / self.c_p + 1.0 / self.c_q)


@dataclass
class DressedLevels:
    """Dressed eigenstates at one flux point.

    ``labels[m]`` is the product-state tuple (qubit level, photon number[,
    parasitic photons]) with the largest overlap, or None if that overlap is
    below 0.5 ("mixed").
    """

    phi_ext: float
    energies: np.ndarray
    labels: list
    overlaps: np.ndarray
    vectors: np.ndarray = field(repr=False)

    def transitions(self) -> np.ndarray:
        """Transition frequencies from the dressed ground state (GHz)."""
        return self.energies - self.energies[0]

    def find(self, label: tuple) -> int | None:
        hits = [m for m, lab in enumerate(self.labels) if lab == tuple(label)]
        if len(hits) != 1:
            return None
        return hits[0]

    def line(self, label: tuple) -> float:
        """Frequency of the dressed state labelled ``label`` above the dressed ground state."""
        m = self.find(label)
        return math.nan if m is None else float(self.energies[m] - self.energies[0])


def _label_states(vectors, shape):
    weights = np.abs(vectors) ** 2
    best = np.argmax(weights, axis=0)
    overlaps = weights[best, np.arange(weights.shape[1])]
    labels = [
        tuple(int(v) for v in np.unravel_index(b, shape)) if o >= LABEL_THRESHOLD else None
        for b, o in zip(best, overlaps)
    ]
    return labels, overlaps


def solve_dressed(h: np.ndarray, shape, phi_ext: float) -> DressedLevels:
    energies, vectors = np.linalg.eigh(h)
    labels, overlaps = _label_states(vectors, shape)
    return DressedLevels(phi_ext, energies, labels, overlaps, vectors)


def dressed_levels(p: CoupledParams, sector: QubitSector | None = None) -> DressedLevels:
    if sector is None:
        sector = qubit_sector(p.qubit, p.n_qubit_levels, p.qubit_dim)
    h = _assemble(sector, p.omega_r, p.g_c, p.g_l, p.n_photons)
    return solve_dressed(h, (sector.size, p.n_photons), p.qubit.phi_ext)


def dressed_spectrum(p: CoupledParams, flux_list, n_lines: int | None = None, workers: int | None = None):
    """Dressed levels at every flux in ``flux_list``.

    Returns a list of :class:`DressedLevels`. With ``n_lines`` only the lowest
    ``n_lines + 1`` states are kept. Flux points are independent and can be
    spread over a thread pool with ``workers``.
    """

    def one(phi):
        lv = dressed_levels(p.at_flux(phi))
        if n_lines is not None:
            k = n_lines + 1
            lv = DressedLevels(lv.phi_ext, lv.energies[:k], lv.labels[:k], lv.overlaps[:k], lv.vectors[:, :k])
        return lv

    return _map(one, list(flux_list), workers)


def _map(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def line_curves(levels: list[DressedLevels], labels) -> dict[tuple, np.ndarray]:
    """Collect dressed transition frequencies per label across a sweep (NaN where absent)."""
    return {tuple(lab): np.array([lv.line(lab) for lv in levels]) for lab in labels}


def dispersive_shift(p: CoupledParams, flux: float | None = None) -> float:
    """chi in MHz: half the change of the resonator transition when the qubit is excited."""
    if flux is not None:
        p = p.at_flux(flux)
    lv = dressed_levels(p)
    needed = [(0, 0), (0, 1), (1, 0), (1, 1)]
    idx = [lv.find(lab) for lab in needed]
    if any(m is None for m in idx):
        missing = [lab for lab, m in zip(needed, idx) if m is None]
        raise LabelingError(
            f"cannot identify dressed states {missing} at phi_ext={p.qubit.phi_ext}; "
            "the qubit is too close to the resonator or the truncation is too small "
            "(increase n_photons / n_qubit_levels)"
        )
    e = lv.energies
    return 1e3 * ((e[idx[3]] - e[idx[2]]) - (e[idx[1]] - e[idx[0]])) / 2


def number_resolved_lines(p: CoupledParams, n_max: int = 3, flux: float | None = None) -> np.ndarray:
    """Qubit 0-1 frequency (GHz) conditioned on k = 0..n_max-1 resonator photons."""
    if flux is not None:
        p = p.at_flux(flux)
    lv = dressed_levels(p)
    out = []
    for k in range(n_max):
        m0, m1 = lv.find((0, k)), lv.find((1, k))
        if m0 is None or m1 is None:
            raise LabelingError(f"photon-number state {k} not identifiable; increase truncation")
        out.append(lv.energies[m1] - lv.energies[m0])
    return np.array(out)


def couplings_from_products(qubit: QubitParams, gc_n: float, gl_phi: float, dim: int | None = None):
    """Bare (g_c, g_l) in GHz from the products g_c |<0|n|1>| and g_l |<0|phi|1>|.

    The products are evaluated at the flux of ``qubit`` (half flux for the
    tabulated values).
    """
    spec = diagonalize(qubit, dim)
    n01 = abs(spec.operator_in_eigenbasis("n")[0, 1])
    phi01 = abs(spec.operator_in_eigenbasis("phi")[0, 1])
    return gc_n / n01, gl_phi / phi01


# --- parasitic coil mode -------------------------------------------------


def parasitic_mode_frequency(pp: ParasiticParams) -> float:
    """omega_p / 2 pi in GHz for the series L_p - C_ser branch."""
    from rfsquid.constants import FEMTO, GHZ, MICRO

    c_ser = pp.series_capacitance * FEMTO
    return 1.0 / math.sqrt(pp.l_p * MICRO * c_ser) / (2 * math.pi) / GHZ


def parasitic_coupling(pp: ParasiticParams, charge_unit: str = "2e") -> float:
    """Closed-form coil-mode coupling g_p = (4e/C_q) sqrt(hbar w_p C_ser / 2), as E/h in GHz.

    ``charge_unit="2e"`` evaluates the expression as written, which corresponds
    to a qubit charge Q_q = 2e n; ``"e"`` uses Q_q = e n, i.e. half the value.
    """
    from rfsquid.constants import E_CHARGE, FEMTO, GHZ, HBAR, PLANCK

    if charge_unit not in ("2e", "e"):
        raise ValueError("charge_unit must be '2e' or 'e'")
    charge = 2 * E_CHARGE if charge_unit == "2e" else E_CHARGE
    omega_p = 2 * math.pi * parasitic_mode_frequency(pp) * GHZ
    c_ser = pp.series_capacitance * FEMTO
    g_joule = 2 * charge / (pp.c_q * FEMTO) * math.sqrt(HBAR * omega_p * c_ser / 2)
    return g_joule / PLANCK / GHZ


def parasitic_coupling_variants(pp: ParasiticParams) -> dict[str, float]:
    return {unit: parasitic_coupling(pp, unit) for unit in ("2e", "e")}


def build_three_mode_hamiltonian(
    p: CoupledParams,
    pp: ParasiticParams | None = None,
    *,
    omega_p: float | None = None,
    g_p: float | None = None,
    n_parasitic: int = 3,
    max_dim: int = MAX_TOTAL_DIM,
    sector: QubitSector | None = None,
) -> np.ndarray:
    """Qubit x resonator x parasitic-mode Hamiltonian (GHz).

    The parasitic mode is a linear oscillator at ``omega_p`` that couples only
    to the qubit charge, ``g_p n (b + b^dag)``; ``g_p`` is the effective
    constant multiplying the Cooper-pair number operator. Missing values are
    taken from ``pp`` via :func:`parasitic_mode_frequency` and
    :func:`parasitic_coupling`.
    """
    if omega_p is None or g_p is None:
        if pp is None:
            raise ValueError("need ParasiticParams or explicit omega_p and g_p")
        omega_p = parasitic_mode_frequency(pp) if omega_p is None else omega_p
        g_p = parasitic_coupling(pp) if g_p is None else g_p
    total = p.n_qubit_levels * p.n_photons * n_parasitic
    if total > max_dim:
        raise MemoryError(f"total dimension {total} exceeds cap {max_dim}")
    if sector is None:
        sector = qubit_sector(p.qubit, p.n_qubit_levels, p.qubit_dim)
    return _assemble(sector, p.omega_r, p.g_c, p.g_l, p.n_photons, (omega_p, g_p, n_parasitic))


def three_mode_levels(p: CoupledParams, pp=None, *, omega_p=None, g_p=None, n_parasitic: int = 3) -> DressedLevels:
    sector = qubit_sector(p.qubit, p.n_qubit_levels, p.qubit_dim)
    h = build_three_mode_hamiltonian(p, pp, omega_p=omega_p, g_p=g_p, n_parasitic=n_parasitic, sector=sector)
    return solve_dressed(h, (sector.size, p.n_photons, n_parasitic), p.qubit.phi_ext)


# --- lumped-element admittance of the coil -------------------------------


class AdmittanceFitError(RuntimeError):
    """Admittance fit failed; ``report`` holds the residual summary."""

    def __init__(self, message, report):
        self.report = report
        super().__init__(f"{message}: {report}")


def admittance(freq_ghz, pp: ParasiticParams) -> np.ndarray:
    """Y(w) in siemens of C_q || L_q in parallel with the series L_p - C_p branch."""
    from rfsquid.constants import FEMTO, GHZ, MICRO, NANO

    w = 2 * np.pi * np.asarray(freq_ghz, dtype=float) * GHZ
    c_q, l_q = pp.c_q * FEMTO, pp.l_q * NANO
    c_p, l_p = pp.c_p * FEMTO, pp.l_p * MICRO
    return 1j * w * c_q + 1.0 / (1j * w * l_q) + 1j * w * c_p / (1 - w**2 * l_p * c_p)


def admittance_pole(pp: ParasiticParams) -> float:
    """Series-resonance frequency 1/(2 pi sqrt(L_p C_p)) in GHz, where |Y| diverges."""
    from rfsquid.constants import FEMTO, GHZ, MICRO

    return 1.0 / (2 * math.pi * math.sqrt(pp.l_p * MICRO * pp.c_p * FEMTO)) / GHZ


def admittance_zeros(pp: ParasiticParams) -> tuple[float, float]:
    """The two frequencies (GHz) where Y vanishes, i.e. the circuit's normal modes."""
    from rfsquid.constants import FEMTO, GHZ, MICRO, NANO

    c_q, l_q = pp.c_q * FEMTO, pp.l_q * NANO
    c_p, l_p = pp.c_p * FEMTO, pp.l_p * MICRO
    # Y = 0  <=>  L_q C_q L_p C_p w^4 - (L_q C_q + L_p C_p + L_q C_p) w^2 + 1 = 0
    a = l_q * c_q * l_p * c_p
    b = l_q * c_q + l_p * c_p + l_q * c_p
    disc = math.sqrt(b * b - 4 * a)
    w2 = sorted(((b - disc) / (2 * a), (b + disc) / (2 * a)))
    lo, hi = (math.sqrt(x) / (2 * math.pi) / GHZ for x in w2)
    return lo, hi


def _linear_circuit_fit(w, y, w0):
    """For a fixed pole w0, Im Y = w C_q - 1/(w L_q) + w C_p / (1 - w^2/w0^2) is
    linear in (C_q, 1/L_q, C_p). Returns the SI solution and its relative RSS."""
    basis = np.column_stack([w, -1.0 / w, w / (1 - (w / w0) ** 2)])
    weight = 1.0 / np.abs(y)
    a = basis * weight[:, None]
    norm = np.linalg.norm(a, axis=0)
    coef, *_ = np.linalg.lstsq(a / norm, y.imag * weight, rcond=None)
    coef = coef / norm
    rss = float(np.sum(((basis @ coef - y.imag) * weight) ** 2))
    return coef, rss


def _initial_circuit_guess(f, y):
    """Starting values (fF, nH, fF, uH): scan the pole position around the
    largest |Y| sample and solve the remaining linear problem at each trial."""
    from rfsquid.constants import GHZ

    w = 2 * np.pi * f * GHZ
    i = int(np.argmax(np.abs(y)))
    lo = w[max(i - 1, 0)]
    hi = w[min(i + 1, len(w) - 1)]
    trials = np.linspace(lo, hi, 201)
    trials = trials[np.all(np.abs(trials[:, None] - w[None, :]) > 1e-9 * trials[:, None], axis=1)]
    best = min(trials, key=lambda w0: _linear_circuit_fit(w, y, w0)[1])
    (c_q, inv_l_q, c_p), _ = _linear_circuit_fit(w, y, best)
    l_p = 1.0 / (best**2 * c_p) if c_p > 0 else float("nan")
    return np.array([c_q * 1e15, 1e9 / inv_l_q if inv_l_q > 0 else float("nan"), c_p * 1e15, l_p * 1e6])


def fit_lumped_admittance(freq_ghz, y, rtol: float = 1e-3) -> ParasiticParams:
    """Least-squares fit of (C_q, L_q, C_p, L_p) to complex admittance samples.

    Residuals are relative, (Y_model - Y) / |Y|, so the fit is not dominated by
    the samples next to the pole. The samples must cover both the pole and the
    upper zero. Raises :class:`AdmittanceFitError` if the relative RMS residual
    exceeds ``rtol``.
    """
    from scipy import optimize

    f = np.asarray(freq_ghz, dtype=float)
    y = np.asarray(y, dtype=complex)
    if f.shape != y.shape or f.size < 8:
        raise ValueError("need matching frequency/admittance arrays with at least 8 samples")
    order = np.argsort(f)
    f, y = f[order], y[order]
    scale = np.abs(y)
    if np.any(scale == 0) or not np.all(np.isfinite(y)):
        raise ValueError("admittance samples must be finite and non-zero")
    x0 = _initial_circuit_guess(f, y)
    if not np.all(np.isfinite(x0) & (x0 > 0)):
        raise AdmittanceFitError("samples do not look like the two-branch circuit", {"initial_guess": x0.tolist()})

    def unpack(x):
        return ParasiticParams(*(float(v) for v in np.exp(x)))

    def resid(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (admittance(f, unpack(x)) - y) / scale
        # a trial pole landing exactly on a sample gives inf; keep it finite and large
        return np.nan_to_num(np.concatenate([r.real, r.imag]), nan=1e6, posinf=1e6, neginf=-1e6)

    best = optimize.least_squares(resid, np.log(x0), method="lm", xtol=1e-15, ftol=1e-15, max_nfev=4000)
    rms = math.sqrt(2 * best.cost / (2 * f.size))
    report = {"relative_rms": rms, "max_relative": float(np.max(np.abs(best.fun))), "nfev": int(best.nfev)}
    if not (best.success and rms <= rtol):
        raise AdmittanceFitError("admittance fit did not converge", report)
    return unpack(best.x)
