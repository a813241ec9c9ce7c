import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from rfsquid import coupled, datasets, noise, presets, qubit
from rfsquid.constants import capacitance_from_ec
from rfsquid.noise import NumberSplitModel, T1Model, T2Model

QE = presets.preset("qubit-E").params()
QF = presets.preset("qubit-F").params()
T1_FLUX = np.linspace(0.46, 0.54, 9)

# --- T1 ------------------------------------------------------------------


def test_model_validation():
    with pytest.raises(ValueError):
        T1Model(0.0, 0.05)
    with pytest.raises(ValueError):
        T1Model(1e4, -1.0)
    with pytest.raises(ValueError):
        T2Model(-1.0)
    with pytest.raises(ValueError):
        T2Model(1.0, t_phi=0.0)
    with pytest.raises(ValueError):
        NumberSplitModel(0.1, 10, 0.0, 1.0)


def test_t1_linear_in_quality_factor():
    a = noise.t1_capacitive(QF, 0.5, T1Model(25_000, 0.06))
    b = noise.t1_capacitive(QF, 0.5, T1Model(50_000, 0.06))
    assert b == pytest.approx(2 * a, rel=1e-12)


def test_t1_zero_temperature_limit():
    # coth -> 1 once hbar omega >> kT
    cold = noise.t1_capacitive(QF, 0.5, T1Model(25_000, 1e-4))
    colder = noise.t1_capacitive(QF, 0.5, T1Model(25_000, 1e-6))
    assert cold == pytest.approx(colder, rel=1e-12)
    assert noise.t1_capacitive(QF, 0.5, T1Model(25_000, 0.2)) < cold


def test_rate_scales_with_frequency_squared():
    base = noise.t1_rate_si(1.0, 2e9, 5e-15, 1e4, 1e-6)
    assert noise.t1_rate_si(1.0, 4e9, 5e-15, 1e4, 1e-6) == pytest.approx(4 * base, rel=1e-12)
    assert noise.t1_rate_si(2.0, 2e9, 5e-15, 1e4, 1e-6) == pytest.approx(4 * base, rel=1e-12)


def test_t1_si_units():
    # Gamma = phi^2 / (2e)^2 * hbar w^2 C / Q at T -> 0, evaluated by hand
    hbar, e = 1.054571817e-34, 1.602176634e-19
    w = 2 * math.pi * 3e9
    expected = 0.5**2 / (2 * e) ** 2 * hbar * w**2 * 6e-15 / 2e4
    assert noise.t1_rate_si(0.5, 3e9, 6e-15, 2e4, 1e-6) == pytest.approx(expected, rel=1e-9)


def test_explicit_capacitance_matches_derived():
    c_ff = capacitance_from_ec(QF.e_c) * 1e15
    a = noise.t1_capacitive(QF, 0.5, T1Model(25_000, 0.06))
    b = noise.t1_capacitive(QF, 0.5, T1Model(25_000, 0.06, c_ff))
    assert a == pytest.approx(b, rel=1e-12)


def test_t1_table_order_of_magnitude():
    # microsecond scale, as measured
    for q, qd in ((QE, 57_000), (QF, 25_000)):
        t1 = noise.t1_capacitive(q, 0.5, T1Model(qd, 0.06))
        assert 1 < t1 < 30


@pytest.mark.parametrize("q, q_diel, temp", [(QE, 57_000, 0.06), (QF, 25_000, 0.08)])
def test_t1_quality_round_trip(q, q_diel, temp):
    t1 = [noise.t1_capacitive(q, f, T1Model(q_diel, temp)) for f in T1_FLUX]
    fit = noise.fit_t1_quality(T1_FLUX, t1, q, temp)
    assert fit.q_diel == pytest.approx(q_diel, rel=1e-9)
    assert fit.residual_rms < 1e-9


def test_t1_quality_with_noise():
    rng = np.random.default_rng(11)
    t1 = np.array([noise.t1_capacitive(QF, f, T1Model(25_000, 0.06)) for f in T1_FLUX])
    fit = noise.fit_t1_quality(T1_FLUX, t1 * np.exp(rng.normal(0, 0.02, t1.size)), QF, 0.06)
    assert fit.q_diel == pytest.approx(25_000, rel=0.02)
    assert 0 < fit.q_err < 0.02 * fit.q_diel


def test_t1_single_point():
    t1 = noise.t1_capacitive(QF, 0.5, T1Model(25_000, 0.06))
    fit = noise.fit_t1_quality([0.5], [t1], QF, 0.06)
    assert fit.q_diel == pytest.approx(25_000, rel=1e-12)
    assert fit.q_err == 0.0 and fit.n_points == 1


@pytest.mark.parametrize("bad", [[0.0, 1.0], [-1.0, 1.0], [math.nan, 1.0], []])
def test_t1_fit_rejects_bad_values(bad):
    with pytest.raises(ValueError):
        noise.fit_t1_quality([0.5, 0.51][: len(bad)], bad, QF, 0.06)


def test_shipped_t1_data(root):
    for name, q, q_diel, temp in (("E", QE, 57_000, 0.06), ("F", QF, 25_000, 0.08)):
        phi, t1, _ = datasets.read_coherence_csv(root / "data" / f"qubit_{name}_t1.csv")
        fit = noise.fit_t1_quality(phi, t1, q, temp)
        assert fit.q_diel == pytest.approx(q_diel, rel=0.05)


# --- T2 ------------------------------------------------------------------


@pytest.mark.parametrize("name", "ABCDEFGH")
def test_richardson_agrees_with_central_difference(name):
    q = presets.preset(name).params()
    for flux in (0.45, 0.47, 0.53, 0.55):
        d1, d_rich = noise.flux_slope(q, flux)
        assert d1 == pytest.approx(d_rich, rel=1e-3, abs=1e-6)


@pytest.mark.parametrize("name", "ABCDEFGH")
def test_sweet_spots(name):
    q = presets.preset(name).params()
    for flux in (0.0, 0.5):
        d1, _ = noise.flux_slope(q, flux)
        assert abs(d1) < 1e-3  # GHz/Phi_0, i.e. < 1 MHz/Phi_0


def test_t2_at_sweet_spot_reduces_to_t1_and_tphi():
    model = T2Model(646.0, 1.0, 6.2)
    t1 = 2.25
    t2 = noise.t2_echo(QF, 0.5, model, t1)
    assert t2 == pytest.approx(1 / (0.5 / t1 + 1 / 6.2), rel=1e-6)


def test_t2_without_dephasing_is_two_t1():
    assert float(noise.t2_from_rates(0.0, 3.0, T2Model(0.0))) == pytest.approx(6.0)


@given(
    slope=st.floats(-50, 50),
    t1=st.floats(0.1, 100),
    a=st.floats(0, 2000),
    t_phi=st.floats(0.1, 1e4),
)
def test_t2_never_exceeds_two_t1(slope, t1, a, t_phi):
    assert float(noise.t2_from_rates(slope, t1, T2Model(a, 1.0, t_phi))) <= 2 * t1 * (1 + 1e-12)


def test_dephasing_rate_units():
    # 1 GHz/Phi_0 slope with 1 micro-Phi_0 noise: 2 pi * 1e3 MHz * 1e-6 = 2 pi kHz -> 1/us
    assert noise.dephasing_rate(1.0, T2Model(1.0)) == pytest.approx(2 * math.pi * 1e-3)
    assert noise.dephasing_rate(-2.0, T2Model(1.0, 3.0)) == pytest.approx(12 * math.pi * 1e-3)


def _synthetic_t2(q, a_phi, t_phi, t1, flux):
    slopes = [noise.flux_slope(q, f)[0] for f in flux]
    return noise.clamped_t2(slopes, np.full(len(flux), t1), T2Model(a_phi, 1.0, t_phi))


@pytest.mark.parametrize("q, a_phi, t_phi, t1", [(QE, 673.0, 30.0, 9.6), (QF, 646.0, 6.2, 2.25)])
def test_t2_round_trip(q, a_phi, t_phi, t1):
    t2 = _synthetic_t2(q, a_phi, t_phi, t1, T1_FLUX)
    fit = noise.fit_t2_flux_noise(T1_FLUX, t2, q, t1)
    assert fit.success
    assert fit.a_phi_sqrt == pytest.approx(a_phi, rel=1e-4)
    assert fit.t_phi == pytest.approx(t_phi, rel=1e-3)
    assert fit.model().a_phi_sqrt == fit.a_phi_sqrt


def test_t2_round_trip_with_noise():
    rng = np.random.default_rng(5)
    t2 = _synthetic_t2(QF, 646.0, 6.2, 2.25, T1_FLUX)
    t2 = t2 * (1 + rng.normal(0, 0.01, t2.size))
    fit = noise.fit_t2_flux_noise(T1_FLUX, t2, QF, 2.25, err_us=0.01 * t2)
    assert fit.a_phi_sqrt == pytest.approx(646.0, rel=0.03)
    assert not fit.wide_uncertainty


def test_flat_t2_data_flagged():
    # only sweet-spot points: sqrt(A) is unconstrained
    flux = np.array([0.5, 0.5, 0.5, 0.5])
    t2 = np.array([2.0, 2.05, 1.95, 2.0])
    fit = noise.fit_t2_flux_noise(flux, t2, QF, 2.25)
    assert fit.wide_uncertainty


def test_t2_fit_accepts_callable_t1():
    t2 = _synthetic_t2(QF, 646.0, 6.2, 2.25, T1_FLUX)
    fit = noise.fit_t2_flux_noise(T1_FLUX, t2, QF, lambda f: 2.25)
    assert fit.a_phi_sqrt == pytest.approx(646.0, rel=1e-4)


def test_shipped_t2_data(root):
    for name, q, a_phi, t_phi in (("E", QE, 673.0, 30.0), ("F", QF, 646.0, 6.2)):
        phi1, t1, _ = datasets.read_coherence_csv(root / "data" / f"qubit_{name}_t1.csv")
        phi2, t2, err = datasets.read_coherence_csv(root / "data" / f"qubit_{name}_t2.csv")
        fit = noise.fit_t2_flux_noise(phi2, t2, q, lambda f: float(np.interp(f, phi1, t1)), err_us=err)
        assert fit.a_phi_sqrt == pytest.approx(a_phi, rel=0.03)
        assert fit.t_phi == pytest.approx(t_phi, rel=0.05)


# --- number splitting ----------------------------------------------------


def test_poisson_weights():
    assert np.array_equal(noise.poisson_weights(0.0), [1.0])
    w = noise.poisson_weights(2.0)
    assert w[1] / w[0] == pytest.approx(2.0)
    assert w[-1] / w.max() >= 1e-6
    assert w.sum() == pytest.approx(1.0, abs=1e-5)


def test_zero_photons_is_single_lorentzian():
    f = np.linspace(1.4, 1.5, 501)
    y = noise.number_split_lineshape(f, NumberSplitModel(0.0, -20.0, 3.0, 1.45))
    assert np.allclose(y, noise.lorentzian(f, 1.45, 3e-3))
    assert y.max() == pytest.approx(1.0)


def test_peak_positions_and_ratio():
    m = NumberSplitModel(0.5, -20.0, 0.5, 1.45)
    f = np.linspace(1.38, 1.47, 90_001)
    y = noise.number_split_lineshape(f, m)
    at = lambda x: float(noise.number_split_lineshape([x], m)[0])  # noqa: E731
    p0, p1 = at(1.45), at(1.43)
    assert p1 / p0 == pytest.approx(0.5, rel=1e-3)
    peak = f[np.argmax(y)]
    assert peak == pytest.approx(1.45, abs=2e-6)


def test_lineshape_area():
    # each unit-peak Lorentzian has area pi * half width; Poisson weights sum to ~1
    m = NumberSplitModel(1.3, 15.0, 2.0, 1.0)
    area, _ = integrate.quad(lambda x: noise.number_split_lineshape([x], m)[0], -np.inf, np.inf, limit=400, points=None)
    expected = math.pi * 1e-3 * noise.poisson_weights(1.3).sum()
    assert area == pytest.approx(expected, rel=1e-6)


def _trace(model, noise_level=0.0, seed=0):
    f = np.linspace(model.f0 - 0.08, model.f0 + 0.08, 801)
    y = noise.number_split_lineshape(f, model)
    rng = np.random.default_rng(seed)
    return f, y + rng.normal(0, noise_level, f.size)


@pytest.mark.parametrize("n_bar", [0.05, 0.3, 1.0, 2.0])
def test_number_split_round_trip(n_bar):
    truth = NumberSplitModel(n_bar, -24.1, 3.0, 1.4716)
    f, y = _trace(truth, 0.005, seed=int(n_bar * 100))
    fit = noise.fit_number_splitting(f, y)
    m = fit.model
    assert m.n_bar == pytest.approx(n_bar, rel=0.05)
    assert m.two_chi == pytest.approx(-24.1, rel=0.05)
    assert m.linewidth == pytest.approx(3.0, rel=0.05)
    assert not fit.low_confidence


def test_positive_spacing_round_trip():
    truth = NumberSplitModel(0.3, 10.0, 2.0, 5.0)
    f, y = _trace(truth, 0.002, seed=1)
    m = noise.fit_number_splitting(f, y).model
    assert m.n_bar == pytest.approx(0.3, rel=0.05)
    assert m.two_chi == pytest.approx(10.0, rel=0.05)


def test_unresolved_peaks_low_confidence():
    truth = NumberSplitModel(0.5, 2.0, 6.0, 1.5)
    f, y = _trace(truth, 0.002, seed=2)
    fit = noise.fit_number_splitting(f, y, initial=dict(n_bar=0.5, two_chi=2.0, linewidth=6.0, f0=1.5, amplitude=1.0))
    assert fit.low_confidence


def test_fitted_photon_number_grows_with_power(root):
    out = []
    for tag in ("m30dBm", "m25dBm", "m20dBm"):
        f, y = datasets.read_trace_csv(root / "data" / f"qubit_C_numbersplit_{tag}.csv")
        out.append(noise.fit_number_splitting(f, y).model.n_bar)
    assert out[0] < out[1] < out[2]


def test_split_fit_rejects_short_trace():
    with pytest.raises(ValueError):
        noise.fit_number_splitting([1, 2, 3], [0, 1, 0])


def test_chi_cross_check_against_full_hamiltonian():
    rec = presets.preset("qubit-C")
    q = rec.params()
    g_c, g_l = coupled.couplings_from_products(q, rec.gc_n_mhz * 1e-3, rec.gl_phi_mhz * 1e-3)
    p = coupled.CoupledParams(q, presets.QUBIT_C_RESONATOR_GHZ, g_c, g_l)
    chi = coupled.dispersive_shift(p)
    truth = NumberSplitModel(0.3, 2 * chi, 3.0, qubit.transition_frequency(q, 0, 1))
    f, y = _trace(truth, 0.005, seed=9)
    fit = noise.fit_number_splitting(f, y)
    check = noise.chi_cross_check(fit.model.two_chi, chi)
    assert check["relative_difference"] < 0.05
