"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed in the terminal summary) and then
asserts it, so a failing criterion is visible both in the summary and as a
failed test. Runtime limits are part of each criterion.
"""

import math
import os
import time

import numpy as np
import pytest
from cli_cases import CASES
from oracle import grid_delocalization, grid_diagonalize

from rfsquid import classify, cli, coupled, datasets, fitting, noise, presets, qubit, synthetic
from rfsquid.presets import TABLE
from rfsquid.qubit import QubitParams

NAMES = sorted(TABLE)


def _clock():
    return time.perf_counter()


def test_01_phase_zpf(criterion):
    t0 = _clock()
    values = {n: qubit.phase_zpf(TABLE[n].params()) for n in NAMES}
    elapsed = _clock() - t0
    worst = max(NAMES, key=lambda n: abs(values[n] - TABLE[n].phase_zpf))
    bad = [f"{n} {values[n]:.3f} vs {TABLE[n].phase_zpf}" for n in NAMES if abs(values[n] - TABLE[n].phase_zpf) > 0.01]
    ok = not bad and elapsed < 1e-3
    detail = f"worst {worst} |diff|={abs(values[worst] - TABLE[worst].phase_zpf):.3f}; off by > 0.01: {bad or 'none'}; {elapsed * 1e3:.3f} ms"
    assert criterion(1, "phase zero-point fluctuations vs table", ok, detail), detail


def test_02_harmonic_limit(criterion):
    t0 = _clock()
    worst_fock = worst_grid = 0.0
    for n in NAMES:
        r = TABLE[n]
        q = QubitParams(r.e_l, r.e_c, 0.0, 0.5)
        w = math.sqrt(8 * r.e_l * r.e_c)
        worst_fock = max(worst_fock, abs(qubit.transition_frequency(q, 0, 1) / w - 1))
        e = grid_diagonalize(q, n_levels=2).energies
        worst_grid = max(worst_grid, abs((e[1] - e[0]) / w - 1))
    elapsed = _clock() - t0
    ok = worst_fock < 1e-6 and worst_grid < 1e-6 and elapsed < 1.0
    detail = f"max rel error Fock {worst_fock:.1e}, grid {worst_grid:.1e}; {elapsed:.2f} s"
    assert criterion(2, "harmonic limit f01 = sqrt(8 E_L E_C)", ok, detail), detail


def test_03_oracle_equivalence(criterion):
    t0 = _clock()
    worst = (0.0, None)
    for n in NAMES:
        for phi in (0.0, 0.25, 0.5):
            q = TABLE[n].params(phi)
            fock = qubit.diagonalize(q).energies[:5]
            grid = grid_diagonalize(q, n_levels=5).energies
            diff = float(np.max(np.abs((fock - fock[0]) - (grid - grid[0]))))
            if diff > worst[0]:
                worst = (diff, f"{n}@{phi}")
    elapsed = _clock() - t0
    ok = worst[0] < 1e-3 and elapsed < 30
    detail = f"max |Fock - grid| = {worst[0] * 1e3:.4f} MHz at {worst[1]}; {elapsed:.1f} s"
    assert criterion(3, "Fock basis vs phase grid, 5 levels x 8 sets x 3 flux", ok, detail), detail


def test_04_regime_classification(criterion):
    expected = {"E": "fluxonium", "F": "quasi-charge", "G": "flux", "H": "flux"}
    got = {n: classify.classify(TABLE[n].params()).label for n in expected}
    ok = got == expected
    detail = ", ".join(f"{n}: {got[n]}" for n in expected)
    assert criterion(4, "regime labels E, F, G, H", ok, detail), detail


def test_05_delocalization(criterion):
    t0 = _clock()
    q = TABLE["F"].params(0.5)
    p = qubit.delocalization_probability(q)
    elapsed = _clock() - t0
    p_grid = grid_delocalization(q)
    ok = abs(p - 0.30) <= 0.03 and elapsed < 5
    detail = f"P(|phi| > pi) = {p:.4f} (grid {p_grid:.4f}), target 0.30 +- 0.03; {elapsed:.2f} s"
    assert criterion(5, "qubit F phase delocalization at half flux", ok, detail), detail


def test_06_parasitic_mode(criterion):
    pp = coupled.ParasiticParams(**presets.PARASITIC_CIRCUIT)
    f = coupled.parasitic_mode_frequency(pp)
    ok = abs(f / 6.74 - 1) <= 0.01
    detail = f"{f:.4f} GHz vs 6.74"
    assert criterion(6, "parasitic coil mode frequency", ok, detail), detail


def _perturbed(p: QubitParams, n: int) -> QubitParams:
    # +-20 % with a different sign pattern per set
    signs = [(1, -1, 1), (-1, 1, -1), (1, 1, -1), (-1, -1, 1)][n % 4]
    return QubitParams(*(v * (1 + 0.2 * s) for v, s in zip((p.e_l, p.e_c, p.e_j), signs)))


def test_07_fit_round_trip(criterion, root):
    t0 = _clock()
    flux = np.linspace(0.0, 0.5, 20)
    worst, lines = 0.0, []
    for k, n in enumerate(NAMES):
        truth = TABLE[n].params(0.0)
        ds = synthetic.qubit_dataset(truth, flux, noise=5e-3, seed=1000 + k)
        assert len(ds.points) == 40
        res = fitting.fit_qubit_params(ds, _perturbed(truth, k))
        err = max(abs(res.params[a] / getattr(truth, a) - 1) for a in fitting.ENERGY_NAMES)
        worst = max(worst, err)
        lines.append(f"{n} {err * 100:.2f}%")
    # coupling stage on the shipped qubit-B dataset, qubit energies at their true values
    ds = datasets.read_spectroscopy_csv(root / "data" / "qubit_B_spectroscopy.csv")
    qb = QubitParams(ds.meta["e_l"], ds.meta["e_c"], ds.meta["e_j"])
    res = fitting.fit_coupling_params(ds, qb, ds.meta["omega_r"], (0.3, 0.1))
    g_err = max(abs(res.params["g_c"] / ds.meta["g_c"] - 1), abs(res.params["g_l"] / ds.meta["g_l"] - 1))
    elapsed = _clock() - t0
    ok = worst <= 0.01 and g_err <= 0.05 and elapsed < 300
    detail = f"energies worst {worst * 100:.2f}% ({', '.join(lines)}); couplings worst {g_err * 100:.2f}%; {elapsed:.0f} s"
    assert criterion(7, "two-stage fit round trip", ok, detail), detail


def test_08_coupling_degeneracy(criterion):
    t0 = _clock()
    rec = TABLE["B"]
    q = rec.params(0.5)
    g_c, g_l = coupled.couplings_from_products(q, rec.gc_n_mhz / 1e3, rec.gl_phi_mhz / 1e3)
    omega_r = 6.0
    cp = coupled.CoupledParams(q.at_flux(0.0), omega_r, g_c, g_l)
    # resonator dispersion at the two sweet spots only
    flux = [0.0] * 4 + [0.5] * 4
    ds = synthetic.coupled_dataset(cp, flux, labels=((0, 1),), noise=1e-4, seed=5)
    starts = [((1.3 * g_c, 0.7 * g_l), omega_r + 0.01), ((0.7 * g_c, 1.3 * g_l), omega_r - 0.01)]
    free = [fitting.fit_coupling_params(ds, q, w0, g0, fix_omega_r=False) for g0, w0 in starts]
    fixed = [fitting.fit_coupling_params(ds, q, omega_r, g0) for g0, _ in starts]
    elapsed = _clock() - t0

    a, b = (np.array([r.params["g_c"], r.params["g_l"], r.params["omega_r"]]) for r in free)
    distinct = bool(np.max(np.abs(a - b) / np.abs(b)) > 0.01)
    rss_a, rss_b = free[0].rss, free[1].rss
    rss_close = abs(rss_a - rss_b) <= 0.01 * max(rss_a, rss_b)
    fixed_err = max(
        max(abs(r.params["g_c"] / g_c - 1), abs(r.params["g_l"] / g_l - 1)) for r in fixed
    )
    ok = distinct and rss_close and fixed_err < 0.01 and elapsed < 120
    detail = (
        f"free g_c {a[0]:.4f} / {b[0]:.4f}, g_l {a[1]:.4f} / {b[1]:.4f}, omega_r {a[2]:.5f} / {b[2]:.5f} "
        f"(rss rel diff {abs(rss_a - rss_b) / max(rss_a, rss_b):.1e}); fixed worst {fixed_err * 100:.2f}% "
        f"(true g_c {g_c:.4f}, g_l {g_l:.4f}); {elapsed:.1f} s"
    )
    assert criterion(8, "coupling degeneracy without fixed omega_r", ok, detail), detail


def test_09_sweet_spots(criterion):
    t0 = _clock()
    worst = 0.0
    for n in NAMES:
        for phi in (0.0, 0.5):
            worst = max(worst, abs(noise.flux_slope(TABLE[n].params(), phi)[0]))
    model = noise.T2Model(646.0, 1.0, 6.2)
    t1 = 2.25
    t2 = noise.t2_echo(TABLE["F"].params(), 0.5, model, t1)
    limit = 1 / (0.5 / t1 + 1 / 6.2)
    elapsed = _clock() - t0
    ok = worst * 1e3 < 1.0 and abs(t2 / limit - 1) < 1e-6 and elapsed < 10
    detail = f"max |df01/dPhi| = {worst * 1e3:.2e} MHz/Phi_0; T2 {t2:.6f} vs limit {limit:.6f} us; {elapsed:.2f} s"
    assert criterion(9, "sweet-spot slope and T2 limit", ok, detail), detail


def test_10_number_splitting(criterion):
    t0 = _clock()
    rec = TABLE["C"]
    q = rec.params(0.5)
    g_c, g_l = coupled.couplings_from_products(q, rec.gc_n_mhz / 1e3, rec.gl_phi_mhz / 1e3)
    chi = coupled.dispersive_shift(coupled.CoupledParams(q, presets.QUBIT_C_RESONATOR_GHZ, g_c, g_l))
    f01 = qubit.transition_frequency(q, 0, 1)
    worst, worst_check = 0.0, 0.0
    rng = np.random.default_rng(42)
    for n_bar in (0.1, 0.3, 1.0):
        truth = noise.NumberSplitModel(n_bar, 2 * chi, 3.0, f01)
        f = np.linspace(f01 - 0.1, f01 + 0.05, 751)
        y = noise.number_split_lineshape(f, truth) + rng.normal(0, 0.01, f.size)
        m = noise.fit_number_splitting(f, y).model
        worst = max(worst, abs(m.n_bar / n_bar - 1), abs(m.two_chi / truth.two_chi - 1), abs(m.linewidth / 3.0 - 1))
        worst_check = max(worst_check, noise.chi_cross_check(m.two_chi, chi)["relative_difference"])
    elapsed = _clock() - t0
    ok = worst <= 0.05 and worst_check <= 0.10 and elapsed < 30
    detail = f"worst parameter error {worst * 100:.2f}%; 2 chi vs model ({2 * chi:.3f} MHz) {worst_check * 100:.2f}%; {elapsed:.1f} s"
    assert criterion(10, "number-splitting fit and chi cross-check", ok, detail), detail


def test_11_noise_fits(criterion):
    t0 = _clock()
    rng = np.random.default_rng(7)
    flux = np.linspace(0.46, 0.54, 17)
    errors = []
    for q_diel, name in ((25_000, "F"), (57_000, "E")):
        q = TABLE[name].params()
        t1 = np.array([noise.t1_capacitive(q, f, noise.T1Model(q_diel, 0.06)) for f in flux])
        # 2 % scatter per point; the estimator's spread is then 0.5 %
        fit = noise.fit_t1_quality(flux, t1 * np.exp(rng.normal(0, 0.02, flux.size)), q, 0.06)
        errors.append(("Q", q_diel, fit.q_diel / q_diel - 1))
    for a_phi, name, t_phi in ((646.0, "F", 6.2), (673.0, "E", 30.0)):
        q = TABLE[name].params()
        t1 = TABLE[name].t1_us
        slopes = [noise.flux_slope(q, f)[0] for f in flux]
        t2 = noise.clamped_t2(slopes, np.full(flux.size, t1), noise.T2Model(a_phi, 1.0, t_phi))
        t2 = t2 * (1 + rng.normal(0, 0.01, flux.size))
        fit = noise.fit_t2_flux_noise(flux, t2, q, t1, err_us=0.01 * t2)
        errors.append(("sqrtA", a_phi, fit.a_phi_sqrt / a_phi - 1))
    elapsed = _clock() - t0
    worst = max(abs(e[2]) for e in errors)
    ok = worst <= 0.03 and elapsed < 30
    detail = ", ".join(f"{k} {v:g}: {e * 100:+.2f}%" for k, v, e in errors) + f"; {elapsed:.1f} s"
    assert criterion(11, "T1 and T2 noise-model fits", ok, detail), detail


def test_12_cli_determinism(criterion, root, tmp_path):
    cwd = os.getcwd()
    os.chdir(root)
    mismatched = []
    try:
        for case, args in sorted(CASES.items()):
            out = tmp_path / case
            if cli.main(args + ["--out", str(out)]) != 0:
                mismatched.append(f"{case} (exit)")
                continue
            ref = root / "tests" / "golden" / case
            for f in sorted(ref.iterdir()):
                if not (out / f.name).exists() or (out / f.name).read_bytes() != f.read_bytes():
                    mismatched.append(f"{case}/{f.name}")
    finally:
        os.chdir(cwd)
    commands = sorted({args[0] for args in CASES.values()})
    ok = not mismatched and set(commands) == set(cli.SCHEMAS)
    detail = f"{len(CASES)} cases over {len(commands)} subcommands; mismatches: {mismatched or 'none'}"
    assert criterion(12, "byte-identical CLI output on repeated runs", ok, detail), detail


@pytest.fixture(autouse=True)
def _quiet_workers(monkeypatch):
    monkeypatch.delenv(cli.WORKERS_ENV, raising=False)
