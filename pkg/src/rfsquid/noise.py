"""Closed-form decoherence models: dielectric-loss T1, flux-noise echo T2 and
photon-number-split qubit lineshapes.

Units at the boundary: flux in Phi_0, frequencies in GHz, times in us, flux
noise amplitude sqrt(A_Phi) in micro-Phi_0, linewidths and 2 chi in MHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from rfsquid import qubit as qcore
from rfsquid.constants import BOLTZMANN, E_CHARGE, FEMTO, GHZ, HBAR, capacitance_from_ec
from rfsquid.qubit import QubitParams

FD_STEP = 1e-4  # Phi_0
RICHARDSON_TOL = 1e-3
POISSON_CUTOFF = 1e-6


@dataclass(frozen=True)
class T1Model:
    """Dielectric loss. ``c_total`` in fF; ``None`` means derive it from E_C."""

    q_diel: float
    temperature: float
    c_total: float | None = None

    def __post_init__(self):
        if not self.q_diel > 0:
            raise ValueError("q_diel must be positive")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive (K)")
        if self.c_total is not None and not self.c_total > 0:
            raise ValueError("c_total must be positive")


@dataclass(frozen=True)
class T2Model:
    a_phi_sqrt: float  # micro Phi_0
    gamma_filter: float = 1.0
    t_phi: float = math.inf  # us

    def __post_init__(self):
        if not self.a_phi_sqrt >= 0:
            raise ValueError("a_phi_sqrt must be non-negative")
        if not self.t_phi > 0:
            raise ValueError("t_phi must be positive")
        if not self.gamma_filter > 0:
            raise ValueError("gamma_filter must be positive")


@dataclass(frozen=True)
class NumberSplitModel:
    n_bar: float
    two_chi: float  # MHz
    linewidth: float  # MHz, full width at half maximum
    f0: float  # GHz
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.n_bar >= 0:
            raise ValueError("n_bar must be non-negative")
        if not self.linewidth > 0:
            raise ValueError("linewidth must be positive")


# --- T1 ------------------------------------------------------------------


def _capacitance(qubit: QubitParams, model: T1Model) -> float:
    if model.c_total is not None:
        return model.c_total * FEMTO
    return capacitance_from_ec(qubit.e_c)


def t1_rate_si(phi01: float, f_q: float, capacitance: float, q_diel: float, temperature: float) -> float:
    """Gamma_1 in 1/s from SI inputs: |<0|phi|1>|, f_q in Hz, C in F, T in K."""
    omega = 2 * math.pi * f_q
    x = HBAR * omega / (2 * BOLTZMANN * temperature)
    coth = 1.0 / math.tanh(x) if x < 350 else 1.0
    return phi01**2 / (2 * E_CHARGE) ** 2 * HBAR * omega**2 * capacitance / q_diel * coth


def t1_capacitive(qubit: QubitParams, flux: float | None, model: T1Model, dim: int | None = None) -> float:
    """T1 in us; ``math.inf`` when the 0-1 phase matrix element vanishes."""
    if flux is not None:
        qubit = qubit.at_flux(flux)
    spec = qcore.diagonalize(qubit, dim)
    phi01 = abs(spec.operator_in_eigenbasis("phi")[0, 1])
    if phi01 == 0.0:
        return math.inf
    rate = t1_rate_si(phi01, spec.transition(0, 1) * GHZ, _capacitance(qubit, model), model.q_diel, model.temperature)
    return 1e6 / rate


# --- T2 ------------------------------------------------------------------


def _f01(qubit: QubitParams, flux: float, dim) -> float:
    return qcore.diagonalize(qubit.at_flux(flux), dim).transition(0, 1)


def flux_slope(qubit: QubitParams, flux: float, step: float = FD_STEP, dim: int | None = None) -> tuple[float, float]:
    """d f01 / d Phi in GHz/Phi_0 by central difference, plus the Richardson
    estimate from steps h and 2h."""
    if dim is None:
        dim = qcore.converged_dim(qubit.at_flux(flux))
    f = {k: _f01(qubit, flux + k * step, dim) for k in (-2, -1, 1, 2)}
    d1 = (f[1] - f[-1]) / (2 * step)
    d2 = (f[2] - f[-2]) / (4 * step)
    return d1, (4 * d1 - d2) / 3


def _rate_per_unit(gamma: float) -> float:
    """Echo rate in 1/us per (GHz/Phi_0 of slope) per (micro-Phi_0 of sqrt(A_Phi))."""
    return 2 * math.pi * 1e3 * 1e-6 * gamma


def dephasing_rate(slope_ghz: float, model: T2Model) -> float:
    """Flux-noise echo rate in 1/us for a slope in GHz/Phi_0."""
    return abs(slope_ghz) * model.a_phi_sqrt * _rate_per_unit(model.gamma_filter)


def t2_from_rates(slope_ghz, t1, model: T2Model):
    """Vectorized echo T2 (us) from slopes (GHz/Phi_0) and T1 (us)."""
    slope_ghz = np.asarray(slope_ghz, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    rate = _rate_per_unit(model.gamma_filter) * model.a_phi_sqrt * np.abs(slope_ghz) + 0.5 / t1 + 1.0 / model.t_phi
    return 1.0 / rate


def t2_echo(qubit: QubitParams, flux: float, model: T2Model, t1: float, dim: int | None = None) -> float:
    """Echo T2 in us, with the slope taken from the numerical spectrum."""
    if not t1 > 0:
        raise ValueError("t1 must be positive")
    slope, _ = flux_slope(qubit, flux, dim=dim)
    return float(t2_from_rates(slope, t1, model))


# --- fits ----------------------------------------------------------------


@dataclass
class QualityFit:
    q_diel: float
    q_err: float
    residual_rms: float  # in log(T1)
    n_points: int


def _positive_series(values, what):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError(f"no {what} values")
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise ValueError(f"{what} values must be positive and finite")
    return values


def fit_t1_quality(flux, t1_us, qubit: QubitParams, temperature: float, c_total: float | None = None, dim=None) -> QualityFit:
    """Q_diel from T1 data by least squares on log(T1).

    T1 is proportional to Q_diel, so the log-space problem is linear with the
    closed-form solution log Q = mean(log T1 - log T1(Q=1)).
    """
    flux = np.asarray(flux, dtype=float)
    t1_us = _positive_series(t1_us, "T1")
    if flux.shape != t1_us.shape:
        raise ValueError("flux and T1 arrays differ in length")
    unit = T1Model(1.0, temperature, c_total)
    base = np.array([t1_capacitive(qubit, f, unit, dim) for f in flux])
    if np.any(~np.isfinite(base)):
        raise ValueError("T1 model is infinite (dark transition) at some flux points")
    r = np.log(t1_us) - np.log(base)
    log_q = float(np.mean(r))
    resid = r - log_q
    n = len(r)
    rms = float(np.sqrt(np.mean(resid**2)))
    err = float(np.std(resid, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    q = math.exp(log_q)
    return QualityFit(q, q * err, rms, n)


@dataclass
class FluxNoiseFit:
    a_phi_sqrt: float
    a_phi_sqrt_err: float
    t_phi: float
    t_phi_err: float
    gamma_filter: float
    rss: float
    wide_uncertainty: bool
    success: bool

    def model(self) -> T2Model:
        return T2Model(self.a_phi_sqrt, self.gamma_filter, self.t_phi)


def clamped_t2(slopes, t1, model: T2Model):
    """T2 bounded from above by 2 T1, as used for fitting."""
    return np.minimum(2 * np.asarray(t1, dtype=float), t2_from_rates(slopes, t1, model))


def fit_t2_flux_noise(flux, t2_us, qubit: QubitParams, t1_interp, gamma: float = 1.0, err_us=None, dim=None, initial=(500.0, 20.0)) -> FluxNoiseFit:
    """Fit (sqrt(A_Phi), T_phi) to echo T2 data.

    ``t1_interp`` is a callable flux -> T1 (us) or a constant. Residuals are
    taken in T2 (weighted by ``err_us`` if given); the model is min(2 T1, T2).
    """
    flux = np.asarray(flux, dtype=float)
    t2_us = _positive_series(t2_us, "T2")
    if flux.shape != t2_us.shape:
        raise ValueError("flux and T2 arrays differ in length")
    if len(flux) < 2:
        raise ValueError("need at least two T2 points")
    t1 = np.array([t1_interp(f) for f in flux]) if callable(t1_interp) else np.full(len(flux), float(t1_interp))
    t1 = _positive_series(t1, "T1")
    slopes = np.array([flux_slope(qubit, f, dim=dim)[0] for f in flux])
    sigma = np.ones_like(t2_us) if err_us is None else _positive_series(err_us, "T2 error")

    def resid(x):
        a, inv_tphi = x
        rate = _rate_per_unit(gamma) * a * np.abs(slopes) + 0.5 / t1 + inv_tphi
        return (np.minimum(2 * t1, 1.0 / rate) - t2_us) / sigma

    x0 = np.array([initial[0], 1.0 / initial[1]])
    sol = optimize.least_squares(resid, x0, bounds=([0.0, 0.0], [np.inf, np.inf]), x_scale=np.abs(x0), method="trf")
    a, inv_tphi = sol.x
    cov = _covariance(sol)
    a_err = math.sqrt(cov[0, 0]) if cov is not None else math.inf
    inv_err = math.sqrt(cov[1, 1]) if cov is not None else math.inf
    t_phi = float(1.0 / inv_tphi) if inv_tphi > 0 else math.inf
    t_phi_err = float(inv_err / inv_tphi**2) if inv_tphi > 0 else math.inf
    wide = not (a_err < 0.5 * max(a, 1e-12) and t_phi_err < 0.5 * t_phi)
    return FluxNoiseFit(float(a), a_err, t_phi, t_phi_err, gamma, float(2 * sol.cost), wide, bool(sol.success))


def _covariance(sol):
    """Parameter covariance from a least_squares result; None if singular."""
    jac = sol.jac
    dof = max(len(sol.fun) - len(sol.x), 1)
    s2 = 2 * sol.cost / dof
    try:
        jtj_inv = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(jtj_inv)):
        return None
    return jtj_inv * s2


# --- number splitting ----------------------------------------------------


def poisson_weights(n_bar: float, cutoff: float = POISSON_CUTOFF) -> np.ndarray:
    """Poisson weights P(k) for k = 0..K, where K is the last k whose weight is
    at least ``cutoff`` times the largest one."""
    if n_bar == 0:
        return np.array([1.0])
    k_peak = math.floor(n_bar)
    log_max = k_peak * math.log(n_bar) - n_bar - special.gammaln(k_peak + 1)
    weights = []
    k = 0
    while True:
        log_w = k * math.log(n_bar) - n_bar - special.gammaln(k + 1)
        if k > k_peak and log_w - log_max < math.log(cutoff):
            break
        weights.append(math.exp(log_w))
        k += 1
    return np.array(weights)


def lorentzian(f, center, fwhm):
    """Unit-peak Lorentzian; all arguments in the same frequency unit."""
    half = fwhm / 2
    return half**2 / ((f - center) ** 2 + half**2)


def number_split_lineshape(freq_axis, model: NumberSplitModel) -> np.ndarray:
    """Poisson-weighted sum of unit-peak Lorentzians at f0 + k * 2 chi.

    ``freq_axis`` in GHz. The k-th peak sits at ``f0 + k * two_chi`` so a
    negative ``two_chi`` places photon peaks below f0.
    """
    f = np.asarray(freq_axis, dtype=float)
    out = np.zeros_like(f)
    for k, w in enumerate(poisson_weights(model.n_bar)):
        center = model.f0 + k * model.two_chi * 1e-3
        out += w * lorentzian(f, center, model.linewidth * 1e-3)
    return model.amplitude * out


@dataclass
class SplitFit:
    model: NumberSplitModel
    errors: dict
    rss: float
    low_confidence: bool
    success: bool

    def to_dict(self):
        m = self.model
        return {
            "n_bar": m.n_bar,
            "two_chi_mhz": m.two_chi,
            "linewidth_mhz": m.linewidth,
            "f0_ghz": m.f0,
            "amplitude": m.amplitude,
            "errors": self.errors,
            "rss": self.rss,
            "low_confidence": self.low_confidence,
        }


def _split_candidates(f, y, two_chi_hint):
    """Starting points for the lineshape fit.

    Peaks are located with a prominence threshold above the noise; every
    detected peak is tried as the zero-photon line with both signs of the
    spacing, since for n_bar >= 1 the zero-photon peak need not be the
    tallest. The spacing is the distance between the two tallest peaks: the
    two largest Poisson weights always belong to neighbouring photon numbers.
    """
    from scipy import signal

    amp = float(np.max(y))
    df = abs(f[1] - f[0]) * 1e3
    noise_sd = 1.4826 * float(np.median(np.abs(np.diff(y) - np.median(np.diff(y))))) / math.sqrt(2)
    idx, props = signal.find_peaks(y, prominence=max(0.1 * amp, 5 * noise_sd))
    if idx.size == 0:
        idx = np.array([int(np.argmax(y))])
    widths = signal.peak_widths(y, idx, rel_height=0.5)[0] * df
    fwhm = float(max(np.median(widths), 2 * df))
    peaks = f[idx]
    if two_chi_hint is not None:
        spacings = [two_chi_hint]
    elif idx.size > 1:
        top = np.argsort(y[idx])[-2:]
        gap = abs(float(peaks[top[1]] - peaks[top[0]])) * 1e3
        spacings = [gap, -gap]
    else:
        # weak photon peak below the prominence threshold: look for it in the
        # residual after removing the main line
        i = int(idx[0])
        rest = y - y[i] * lorentzian(f, f[i], fwhm * 1e-3)
        rest[np.abs(f - f[i]) < fwhm * 1e-3] = -np.inf
        spacings = [(f[int(np.argmax(rest))] - f[i]) * 1e3, 2 * fwhm, -2 * fwhm]
    out = []
    for i, f0 in zip(idx, peaks):
        for sp in spacings:
            j = int(np.argmin(np.abs(f - (f0 + sp * 1e-3))))
            n_guess = min(max(float(y[j] / max(y[i], 1e-12)), 0.02), 5.0)
            out.append(dict(n_bar=n_guess, two_chi=sp, linewidth=fwhm, f0=float(f0), amplitude=float(y[i]) * math.exp(n_guess)))
    return out


def fit_number_splitting(freq_ghz, amplitude, two_chi_hint: float | None = None, initial: dict | None = None) -> SplitFit:
    """Least-squares fit of one trace to the Poisson-Lorentzian lineshape.

    Several starting points are tried (see :func:`_split_candidates`) and the
    lowest residual wins. The fit is flagged ``low_confidence`` when |2 chi| is
    below the linewidth, i.e. the photon peaks are not resolved.
    """
    f = np.asarray(freq_ghz, dtype=float)
    y = np.asarray(amplitude, dtype=float)
    if f.shape != y.shape or f.size < 6:
        raise ValueError("need matching freq/amplitude arrays with at least 6 samples")
    order = np.argsort(f)
    f, y = f[order], y[order]
    names = ["n_bar", "two_chi", "linewidth", "f0", "amplitude"]
    starts = [initial] if initial else _split_candidates(f, y, two_chi_hint)

    def resid(x):
        n_bar, two_chi, lw, f0, amp = x
        return number_split_lineshape(f, NumberSplitModel(n_bar, two_chi, lw, f0, amp)) - y

    lower = [0.0, -np.inf, 1e-6, -np.inf, 0.0]
    upper = [50.0, np.inf, np.inf, np.inf, np.inf]
    best = None
    for g in starts:
        x0 = np.array([g[k] for k in names], dtype=float)
        x0[0] = min(max(x0[0], 1e-3), 20.0)
        scale = np.array([max(abs(x0[0]), 0.05), max(abs(x0[1]), 0.1), max(x0[2], 0.01), 1e-3, max(abs(x0[4]), 1e-12)])
        sol = optimize.least_squares(resid, x0, bounds=(lower, upper), x_scale=scale, method="trf", xtol=1e-12, ftol=1e-12)
        if best is None or sol.cost < best.cost:
            best = sol
    n_bar, two_chi, lw, f0, amp = (float(v) for v in best.x)
    cov = _covariance(best)
    errs = {k: (math.sqrt(cov[i, i]) if cov is not None and cov[i, i] >= 0 else math.inf) for i, k in enumerate(names)}
    low = abs(two_chi) < lw
    return SplitFit(NumberSplitModel(n_bar, two_chi, lw, f0, amp), errs, float(2 * best.cost), low, bool(best.success))


def chi_cross_check(fitted_two_chi_mhz: float, chi_model_mhz: float) -> dict:
    """Compare a fitted peak spacing with 2 chi from the coupled model."""
    expected = 2 * chi_model_mhz
    rel = abs(abs(fitted_two_chi_mhz) - abs(expected)) / abs(expected) if expected else math.inf
    return {"fitted_two_chi_mhz": fitted_two_chi_mhz, "model_two_chi_mhz": expected, "relative_difference": rel}
