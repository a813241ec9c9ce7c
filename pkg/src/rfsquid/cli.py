"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``), applies flag
overrides on top (flags win), validates the merged settings, computes, and
only then writes its outputs into ``--out``. The resolved config is echoed into
every JSON output. Exit codes: 0 ok, 1 computation failure, 2 usage/config.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rfsquid import classify as classify_mod
from rfsquid import coupled, datasets, fitting, noise, presets, qubit
from rfsquid.qubit import QubitParams

SCHEMA_VERSION = 1
WORKERS_ENV = "RFSQUID_WORKERS"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Opt:
    type: type
    default: object = None
    help: str = ""
    required: bool = False


_QUBIT = {
    "preset": Opt(str, None, "named parameter set qubit-A .. qubit-H"),
    "e_l": Opt(float, None, "inductive energy (GHz)"),
    "e_c": Opt(float, None, "charging energy (GHz)"),
    "e_j": Opt(float, None, "Josephson energy (GHz)"),
    "dim": Opt(int, None, "oscillator basis size (default: converge automatically)"),
}
_SWEEP = {
    "flux_start": Opt(float, 0.0, "first flux point (Phi_0)"),
    "flux_stop": Opt(float, 1.0, "last flux point (Phi_0)"),
    "flux_steps": Opt(int, 201, "number of flux points"),
}
_COUPLING = {
    "omega_r": Opt(float, None, "bare resonator frequency (GHz); enables the coupled model"),
    "g_c": Opt(float, None, "capacitive coupling (GHz); default from preset"),
    "g_l": Opt(float, None, "inductive coupling (GHz); default from preset"),
    "n_photons": Opt(int, 5, "resonator Fock states"),
    "n_qubit_levels": Opt(int, 20, "qubit eigenstates kept in the coupled model"),
}

SCHEMAS = {
    "spectrum": {
        **_QUBIT,
        **_SWEEP,
        **_COUPLING,
        "n_levels": Opt(int, 4, "bare qubit levels; transitions 0-1 .. 0-(n-1) are emitted"),
        "parasitic": Opt(bool, False, "add the parasitic coil mode (needs omega_r)"),
        "omega_p": Opt(float, presets.PARASITIC_MEASURED_GHZ, "parasitic mode frequency (GHz)"),
        "g_p": Opt(float, presets.PARASITIC_COUPLING_GHZ, "parasitic coupling (GHz)"),
        "n_parasitic": Opt(int, 3, "parasitic Fock states"),
    },
    "fit": {
        **_QUBIT,
        "dataset": Opt(str, None, "spectroscopy CSV", required=True),
        "omega_r": Opt(float, None, "bare resonator frequency (GHz); enables the coupling stage"),
        "g_c": Opt(float, 0.05, "initial capacitive coupling (GHz)"),
        "g_l": Opt(float, 0.05, "initial inductive coupling (GHz)"),
        "max_iterations": Opt(int, 10_000, "optimizer iteration cap"),
        "fatol": Opt(float, 1e-7, "RSS tolerance (GHz^2)"),
        "verify_truncation": Opt(bool, True, "refit at twice the basis size"),
        "n_photons": Opt(int, 5, "resonator Fock states"),
        "n_qubit_levels": Opt(int, 20, "qubit eigenstates kept in the coupled model"),
    },
    "classify": {**_QUBIT},
    "t1": {
        **_QUBIT,
        **_SWEEP,
        "q_diel": Opt(float, None, "dielectric quality factor"),
        "temperature": Opt(float, None, "temperature (K)", required=True),
        "c_total": Opt(float, None, "total capacitance (fF); default from E_C"),
        "dataset": Opt(str, None, "coherence CSV to fit Q_diel against"),
    },
    "t2": {
        **_QUBIT,
        **_SWEEP,
        "a_phi_sqrt": Opt(float, None, "flux-noise amplitude (micro Phi_0); default from preset"),
        "gamma": Opt(float, 1.0, "echo filter constant"),
        "t_phi": Opt(float, math.inf, "shot-noise dephasing time (us)"),
        "t1": Opt(float, None, "constant T1 (us); default from preset"),
        "dataset": Opt(str, None, "coherence CSV of echo T2 to fit"),
        "t1_dataset": Opt(str, None, "coherence CSV of T1, interpolated in flux"),
    },
    "numbersplit": {
        "traces": Opt(list, None, "trace CSV files, one per drive power", required=True),
        "powers": Opt(list, None, "drive power per trace (dBm), for the report"),
        "two_chi_hint": Opt(float, None, "expected peak spacing (MHz)"),
        **_QUBIT,
        "phi_ext": Opt(float, 0.5, "flux of the cross-check (Phi_0)"),
        "omega_r": Opt(float, None, "bare resonator frequency for the cross-check (GHz)"),
        "g_c": Opt(float, None, "capacitive coupling (GHz)"),
        "g_l": Opt(float, None, "inductive coupling (GHz)"),
    },
    "parasitic": {
        "c_q": Opt(float, presets.PARASITIC_CIRCUIT["c_q"], "qubit capacitance (fF)"),
        "l_q": Opt(float, presets.PARASITIC_CIRCUIT["l_q"], "qubit inductance (nH)"),
        "c_p": Opt(float, presets.PARASITIC_CIRCUIT["c_p"], "coil self-capacitance (fF)"),
        "l_p": Opt(float, presets.PARASITIC_CIRCUIT["l_p"], "coil inductance (uH)"),
    },
    "admittance-fit": {
        "dataset": Opt(str, None, "admittance CSV freq_ghz,re_y,im_y", required=True),
        "rtol": Opt(float, 1e-3, "largest acceptable relative RMS residual"),
    },
}

OUTPUTS = {
    "spectrum": ("spectrum.csv", "spectrum.json"),
    "fit": ("fit.json", "residuals.csv"),
    "classify": ("classify.json",),
    "t1": ("t1.csv", "t1.json"),
    "t2": ("t2.csv", "t2.json"),
    "numbersplit": ("numbersplit.csv", "numbersplit.json"),
    "parasitic": ("parasitic.json",),
    "admittance-fit": ("admittance_fit.csv", "admittance_fit.json"),
}


# --- config ---------------------------------------------------------------


def _coerce(name, opt: Opt, value):
    if value is None:
        return None
    try:
        if opt.type is bool:
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "yes", "1", "false", "no", "0"):
                return value.lower() in ("true", "yes", "1")
            raise ValueError(value)
        if opt.type is list:
            if isinstance(value, str):
                return [v for v in value.split(",") if v]
            if not isinstance(value, list):
                raise ValueError(value)
            return list(value)
        if opt.type is float:
            if isinstance(value, bool):
                raise ValueError(value)
            return float(value)
        if opt.type is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        return opt.type(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot interpret {value!r} as {opt.type.__name__}") from None


def resolve_config(command: str, file_config: dict, overrides: dict, base_dir: Path | None = None) -> dict:
    """Merge defaults, config file and flag overrides; reject unknown keys."""
    schema = SCHEMAS[command]
    unknown = sorted(set(file_config) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys for {command!r}: {', '.join(unknown)}")
    out = {k: opt.default for k, opt in schema.items()}
    for source in (file_config, overrides):
        for k, v in source.items():
            if v is not None:
                out[k] = _coerce(k, schema[k], v)
    if out.get("preset") is not None:
        try:
            rec = presets.preset(out["preset"])
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        # echo the energies actually used; explicit values win over the preset
        for k in ("e_l", "e_c", "e_j"):
            if out.get(k) is None:
                out[k] = getattr(rec, k)
    missing = [k for k, opt in schema.items() if opt.required and out[k] is None]
    if missing:
        raise ConfigError(f"missing required setting(s): {', '.join(missing)}")
    # data paths in a config file are relative to that file
    if base_dir is not None:
        for k in ("dataset", "t1_dataset", "traces"):
            if k in file_config and overrides.get(k) is None:
                v = out[k]
                out[k] = [_rebase(base_dir, t) for t in v] if isinstance(v, list) else _rebase(base_dir, v)
    return out


def _rebase(base_dir: Path, path: str) -> str:
    if os.path.isabs(path):
        return path
    return os.path.relpath(base_dir / path)


def _qubit_from(cfg, phi_ext=0.5) -> QubitParams:
    rec = presets.preset(cfg["preset"]) if cfg.get("preset") else None
    values = {}
    for k in ("e_l", "e_c", "e_j"):
        v = cfg.get(k)
        if v is None and rec is not None:
            v = getattr(rec, k)
        if v is None:
            raise ConfigError(f"qubit energies needed: give --preset or --{k.replace('_', '-')} (missing {k})")
        values[k] = v
    try:
        return QubitParams(phi_ext=phi_ext, **values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _flux_axis(cfg):
    n = cfg["flux_steps"]
    if n < 1:
        raise ConfigError("flux_steps must be at least 1")
    return np.linspace(cfg["flux_start"], cfg["flux_stop"], n)


def _couplings(cfg, q: QubitParams):
    g_c, g_l = cfg.get("g_c"), cfg.get("g_l")
    if (g_c is None or g_l is None) and cfg.get("preset"):
        rec = presets.preset(cfg["preset"])
        pc, pl = coupled.couplings_from_products(q.at_flux(0.5), rec.gc_n_mhz / 1e3, rec.gl_phi_mhz / 1e3)
        g_c = pc if g_c is None else g_c
        g_l = pl if g_l is None else g_l
    return (g_c or 0.0), (g_l or 0.0)


def _workers():
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be positive")
    return n


# --- output -----------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return repr(float(x))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def json_text(payload: dict, command: str, cfg: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg, **payload}
    return json.dumps(fitting._jsonable(doc), indent=2, sort_keys=True) + "\n"


def write_outputs(out_dir: Path, files: dict[str, str]):
    """Write all files or none: everything goes to temporaries first."""
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, out_dir / name))
        placed = []
        try:
            for tmp, final in staged:
                os.replace(tmp, final)
                placed.append(final)
        except OSError:
            for final in placed:
                final.unlink(missing_ok=True)
            raise
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


# --- subcommands ------------------------------------------------------------


def cmd_spectrum(cfg):
    flux = _flux_axis(cfg)
    q = _qubit_from(cfg)
    n_levels = cfg["n_levels"]
    if n_levels < 2:
        raise ConfigError("n_levels must be at least 2")
    workers = _workers()
    bare_labels = [f"q:0-{j}" for j in range(1, n_levels)]

    def bare(phi):
        spec = qubit.diagonalize(q.at_flux(phi), cfg["dim"])
        return [spec.transition(0, j) for j in range(1, n_levels)]

    rows = coupled._map(bare, list(flux), workers)
    header = ["phi_ext"] + bare_labels
    table = [[phi] + r for phi, r in zip(flux, rows)]

    summary = {}
    if cfg["parasitic"] and cfg["omega_r"] is None:
        raise ConfigError("parasitic mode needs omega_r")
    if cfg["omega_r"] is not None:
        g_c, g_l = _couplings(cfg, q)
        p = coupled.CoupledParams(q, cfg["omega_r"], g_c, g_l, cfg["n_photons"], cfg["n_qubit_levels"], cfg["dim"])
        labels = [(0, 1), (1, 0), (2, 0)]
        names = ["r:disp", "d:q:0-1", "d:q:0-2"]
        if cfg["parasitic"]:
            labels = [(0, 1, 0), (1, 0, 0), (2, 0, 0), (0, 0, 1)]
            names.append("p:1")

            def one(phi):
                return coupled.three_mode_levels(
                    p.at_flux(phi), omega_p=cfg["omega_p"], g_p=cfg["g_p"], n_parasitic=cfg["n_parasitic"]
                )

            levels = coupled._map(one, list(flux), workers)
        else:
            levels = coupled.dressed_spectrum(p, flux, workers=workers)
        curves = coupled.line_curves(levels, labels)
        header += names
        for n, row in enumerate(table):
            row.extend(curves[lab][n] for lab in labels)
        summary["couplings"] = {"g_c": g_c, "g_l": g_l, "omega_r": cfg["omega_r"]}
        if cfg["parasitic"]:
            summary["parasitic"] = {"omega_p": cfg["omega_p"], "g_p": cfg["g_p"]}

    report = classify_mod.classify(q)
    sweet = {}
    for phi in (0.0, 0.5):
        spec = qubit.diagonalize(q.at_flux(phi), cfg["dim"])
        sweet[f"{phi:g}"] = {"f01": spec.transition(0, 1), "f02": spec.transition(0, 2)}
    summary.update(
        phase_zpf=q.phase_zpf,
        regime=report.to_dict(),
        sweet_spots=sweet,
        columns=header,
    )
    return {
        "spectrum.csv": csv_text(header, table),
        "spectrum.json": summary,
    }


def cmd_fit(cfg):
    try:
        data = datasets.read_spectroscopy_csv(cfg["dataset"])
        data.validate()
    except OSError as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from None
    if not cfg.get("preset") and any(cfg[k] is None for k in ("e_l", "e_c", "e_j")):
        raise ConfigError("initial guess missing: give --preset qubit-X or all of --e-l --e-c --e-j")
    initial = _qubit_from(cfg, 0.0)
    opts = fitting.FitOptions(
        max_iterations=cfg["max_iterations"],
        fatol=cfg["fatol"],
        dim=cfg["dim"],
        verify_truncation=cfg["verify_truncation"],
        n_photons=cfg["n_photons"],
        n_qubit_levels=cfg["n_qubit_levels"],
        omega_r=cfg["omega_r"],
        initial_couplings=(cfg["g_c"], cfg["g_l"]),
    )
    stage1, stage2 = fitting.fit_pipeline(data, initial, opts)
    rows = []
    stage1_points = [p for p in data.points if p.kind == datasets.QUBIT_LINE]
    for p, r in zip(stage1_points, stage1.residuals):
        rows.append([p.phi_ext, p.freq, p.freq - r, r, 1, p.label])
    if stage2 is not None:
        model = fitting.DressedLineModel(data, QubitParams(**stage1.params), opts)
        for p, r in zip(model.points, stage2.residuals):
            rows.append([p.phi_ext, p.freq, p.freq - r, r, 2, p.label])
    payload = {
        "qubit_fit": stage1.to_dict(),
        "coupling_fit": stage2.to_dict() if stage2 else None,
    }
    return {
        "fit.json": payload,
        "residuals.csv": csv_text(["phi_ext", "freq_ghz", "model_ghz", "residual_ghz", "stage", "label"], rows),
    }


def cmd_classify(cfg):
    q = _qubit_from(cfg)
    return {"classify.json": {"phase_zpf": q.phase_zpf, **classify_mod.classify(q).to_dict()}}


def cmd_t1(cfg):
    q = _qubit_from(cfg)
    payload = {}
    model_q = cfg["q_diel"]
    if cfg["dataset"]:
        phi, t1, _ = _read_coherence(cfg["dataset"])
        fit = noise.fit_t1_quality(phi, t1, q, cfg["temperature"], cfg["c_total"], cfg["dim"])
        payload["fit"] = {"q_diel": fit.q_diel, "q_err": fit.q_err, "residual_rms_log": fit.residual_rms, "n_points": fit.n_points}
        model_q = fit.q_diel if model_q is None else model_q
    if model_q is None:
        raise ConfigError("need q_diel or a dataset to fit it from")
    model = noise.T1Model(model_q, cfg["temperature"], cfg["c_total"])
    flux = _flux_axis(cfg)
    t1 = coupled._map(lambda f: noise.t1_capacitive(q, f, model, cfg["dim"]), list(flux), _workers())
    payload["model"] = {"q_diel": model_q, "temperature": cfg["temperature"], "c_total_ff": cfg["c_total"]}
    payload["t1_half_flux_us"] = noise.t1_capacitive(q, 0.5, model, cfg["dim"])
    return {"t1.csv": csv_text(["phi_ext", "t1_us"], zip(flux, t1)), "t1.json": payload}


def _read_coherence(path):
    try:
        return datasets.read_coherence_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from None


def cmd_t2(cfg):
    q = _qubit_from(cfg)
    rec = presets.preset(cfg["preset"]) if cfg.get("preset") else None
    if cfg["t1_dataset"]:
        t1_phi, t1_val, _ = _read_coherence(cfg["t1_dataset"])
        order = np.argsort(t1_phi)

        def t1_of(f):
            return float(np.interp(f, t1_phi[order], t1_val[order]))

    else:
        t1_const = cfg["t1"] if cfg["t1"] is not None else (rec.t1_us if rec else None)
        if t1_const is None:
            raise ConfigError("need t1 (us), a preset with T1, or t1_dataset")

        def t1_of(f):
            return t1_const

    payload = {}
    a_phi, t_phi = cfg["a_phi_sqrt"], cfg["t_phi"]
    if cfg["dataset"]:
        phi, t2, err = _read_coherence(cfg["dataset"])
        fit = noise.fit_t2_flux_noise(phi, t2, q, t1_of, cfg["gamma"], err_us=err if np.all(err > 0) else None, dim=cfg["dim"])
        payload["fit"] = {
            "a_phi_sqrt": fit.a_phi_sqrt,
            "a_phi_sqrt_err": fit.a_phi_sqrt_err,
            "t_phi": fit.t_phi,
            "t_phi_err": fit.t_phi_err,
            "gamma": fit.gamma_filter,
            "rss": fit.rss,
            "wide_uncertainty": fit.wide_uncertainty,
        }
        a_phi = fit.a_phi_sqrt if a_phi is None else a_phi
        t_phi = fit.t_phi if cfg["t_phi"] == math.inf else t_phi
    if a_phi is None:
        a_phi = rec.sqrt_a_phi if rec and rec.sqrt_a_phi is not None else None
    if a_phi is None:
        raise ConfigError("need a_phi_sqrt, a preset that has it, or a dataset to fit it from")
    model = noise.T2Model(a_phi, cfg["gamma"], t_phi)
    flux = _flux_axis(cfg)

    def one(f):
        t1 = t1_of(f)
        return t1, noise.t2_echo(q, f, model, t1, cfg["dim"])

    rows = coupled._map(one, list(flux), _workers())
    t2 = [min(r[1], 2 * r[0]) for r in rows]
    t1_half = t1_of(0.5)
    payload["model"] = {"a_phi_sqrt": a_phi, "gamma": cfg["gamma"], "t_phi": t_phi}
    payload["sweet_spot"] = {
        "t1_us": t1_half,
        "t2_us": noise.t2_echo(q, 0.5, model, t1_half, cfg["dim"]),
        "limit_us": 1.0 / (0.5 / t1_half + 1.0 / t_phi),
    }
    return {
        "t2.csv": csv_text(["phi_ext", "t1_us", "t2_us"], [(f, r[0], v) for f, r, v in zip(flux, rows, t2)]),
        "t2.json": payload,
    }


def cmd_numbersplit(cfg):
    traces = cfg["traces"]
    powers = cfg["powers"]
    if powers is not None and len(powers) != len(traces):
        raise ConfigError("powers must list one value per trace")
    fits, rows = [], []
    for n, path in enumerate(traces):
        try:
            f, y = datasets.read_trace_csv(path)
        except OSError as exc:
            raise ConfigError(f"cannot read trace: {exc}") from None
        fit = noise.fit_number_splitting(f, y, cfg["two_chi_hint"])
        entry = {"trace": Path(path).name, **fit.to_dict()}
        if powers is not None:
            entry["power"] = float(powers[n])
        fits.append(entry)
        model = noise.number_split_lineshape(f, fit.model)
        rows += [[n, fi, yi, mi] for fi, yi, mi in zip(f, y, model)]
    payload = {"fits": fits}
    have_qubit = cfg.get("preset") or all(cfg[k] is not None for k in ("e_l", "e_c", "e_j"))
    if cfg["omega_r"] is not None and have_qubit:
        q = _qubit_from(cfg, cfg["phi_ext"])
        g_c, g_l = _couplings(cfg, q)
        chi = coupled.dispersive_shift(coupled.CoupledParams(q, cfg["omega_r"], g_c, g_l))
        payload["cross_check"] = [noise.chi_cross_check(e["two_chi_mhz"], chi) for e in fits]
        payload["chi_model_mhz"] = chi
    return {
        "numbersplit.csv": csv_text(["trace", "freq_ghz", "amplitude", "model"], rows),
        "numbersplit.json": payload,
    }


def _parasitic_summary(pp: coupled.ParasiticParams):
    lo, hi = coupled.admittance_zeros(pp)
    return {
        "omega_p_ghz": coupled.parasitic_mode_frequency(pp),
        "g_p_ghz": coupled.parasitic_coupling_variants(pp),
        "series_capacitance_ff": pp.series_capacitance,
        "admittance_pole_ghz": coupled.admittance_pole(pp),
        "admittance_zeros_ghz": [lo, hi],
    }


def cmd_parasitic(cfg):
    try:
        pp = coupled.ParasiticParams(cfg["c_q"], cfg["l_q"], cfg["c_p"], cfg["l_p"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return {"parasitic.json": _parasitic_summary(pp)}


def cmd_admittance_fit(cfg):
    try:
        f, y = datasets.read_admittance_csv(cfg["dataset"])
    except OSError as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from None
    pp = coupled.fit_lumped_admittance(f, y, cfg["rtol"])
    model = coupled.admittance(f, pp)
    rows = [[fi, yi.real, yi.imag, mi.real, mi.imag] for fi, yi, mi in zip(f, y, model)]
    payload = {"circuit": {"c_q_ff": pp.c_q, "l_q_nh": pp.l_q, "c_p_ff": pp.c_p, "l_p_uh": pp.l_p}, **_parasitic_summary(pp)}
    return {
        "admittance_fit.csv": csv_text(["freq_ghz", "re_y", "im_y", "re_y_model", "im_y_model"], rows),
        "admittance_fit.json": payload,
    }


COMMANDS = {
    "spectrum": cmd_spectrum,
    "fit": cmd_fit,
    "classify": cmd_classify,
    "t1": cmd_t1,
    "t2": cmd_t2,
    "numbersplit": cmd_numbersplit,
    "parasitic": cmd_parasitic,
    "admittance-fit": cmd_admittance_fit,
}


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfsquid", description="rf-SQUID qubit spectra, fits and loss models")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, help=f"run {name}", argument_default=None)
        sp.add_argument("--config", help="JSON config file; flags override its values")
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        for key, opt in schema.items():
            flag = "--" + key.replace("_", "-")
            if opt.type is list:
                sp.add_argument(flag, dest=key, nargs="+", help=opt.help)
            elif opt.type is bool:
                sp.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None, help=opt.help)
            else:
                sp.add_argument(flag, dest=key, help=opt.help + (f" [default {opt.default}]" if opt.default is not None else ""))
    return parser


def _load_config(path):
    if path is None:
        return {}, None
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc, Path(path).resolve().parent


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    command = args.command
    try:
        file_cfg, base = _load_config(args.config)
        overrides = {k: getattr(args, k) for k in SCHEMAS[command]}
        cfg = resolve_config(command, file_cfg, overrides, base)
        outputs = COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"rfsquid {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except datasets.DatasetError as exc:
        print(f"rfsquid {command}: invalid dataset:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # computation failure: report and leave no files behind
        print(f"rfsquid {command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    files = {name: (json_text(v, command, cfg) if isinstance(v, dict) else v) for name, v in outputs.items()}
    try:
        write_outputs(Path(args.out), files)
    except OSError as exc:
        print(f"rfsquid {command}: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for name in files:
        print(Path(args.out) / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
