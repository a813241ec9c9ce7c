"""Two-stage spectroscopy fitting.

Stage one adjusts (E_L, E_C, E_J) of the bare qubit to the qubit lines.
Stage two freezes the qubit, fixes the bare resonator frequency and adjusts
(g_c, g_l) of the coupled model against resonator and qubit lines. Both
stages use Nelder-Mead with adaptive coefficients; there is no randomness on
the default path.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from rfsquid import coupled, qubit
from rfsquid.datasets import QUBIT_LINE, RESONATOR_LINE, DatasetError, SpectroscopyDataset
from rfsquid.qubit import QubitParams

log = logging.getLogger(__name__)

PENALTY = 1e6
ENERGY_NAMES = ("e_l", "e_c", "e_j")


@dataclass
class FitOptions:
    max_iterations: int = 10_000
    fatol: float = 1e-7  # GHz^2 on the weighted RSS
    xatol_log: float = 1e-7  # stage one works in log-energies
    xatol_coupling: float = 1e-6  # GHz
    dim: int | None = None
    n_candidates: int = 4
    verify_truncation: bool = True
    truncation_shift_limit: float = 1e-3
    n_photons: int = 5
    n_qubit_levels: int = 20
    omega_r: float | None = None
    initial_couplings: tuple[float, float] = (0.05, 0.05)
    multistart: int = 0
    seed: int | None = None
    anisotropy_limit: float = 100.0


@dataclass
class FitResult:
    params: dict
    uncertainties: dict
    rss: float
    n_iterations: int
    converged: bool
    residuals: list
    history: list = field(default_factory=list, repr=False)
    simplex_size: float = math.nan
    warnings: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("history")
        return out


# --- models ---------------------------------------------------------------


class _Grouped:
    """Points grouped by flux so every flux value is solved once per evaluation."""

    def __init__(self, points):
        self.points = list(points)
        self.flux = sorted({p.phi_ext for p in self.points})
        index = {phi: n for n, phi in enumerate(self.flux)}
        self.group = [index[p.phi_ext] for p in self.points]
        self.obs = np.array([p.freq for p in self.points])
        self.weights = np.array([p.weight for p in self.points])
        self.labels = [p.line for p in self.points]


class QubitLineModel(_Grouped):
    """Bare-qubit transition frequencies for qubit-line points.

    Labelled points use their transition; ``+kph`` tags add k resonator quanta
    (requires ``omega_r``). Unassigned points take the nearest of the 0->j
    lines, j = 1..n_candidates, plus photon replicas when the dataset allows.
    """

    def __init__(self, dataset: SpectroscopyDataset, dim: int, n_candidates: int = 4, omega_r=None):
        super().__init__(p for p in dataset.points if p.kind == QUBIT_LINE)
        self.dim = dim
        self.n_candidates = n_candidates
        self.omega_r = omega_r if omega_r is not None else dataset.meta.get("omega_r")
        self.replicas = dataset.max_photon_replicas if self.omega_r is not None else 0
        need = [lab.j + 1 for lab in self.labels if lab is not None]
        self.n_levels = max(need + [n_candidates + 1])
        if any(lab is not None and lab.photons for lab in self.labels) and self.omega_r is None:
            raise DatasetError(["photon-replica labels need omega_r in the dataset metadata"])

    def predict(self, e_l, e_c, e_j) -> np.ndarray:
        base = QubitParams(e_l, e_c, e_j)
        levels = [qubit.energies(base.at_flux(phi), self.dim, self.n_levels) for phi in self.flux]
        out = np.empty(len(self.points))
        for n, (g, lab) in enumerate(zip(self.group, self.labels)):
            e = levels[g]
            if lab is not None:
                out[n] = e[lab.j] - e[lab.i] + lab.photons * (self.omega_r or 0.0)
                continue
            cands = e[1 : self.n_candidates + 1] - e[0]
            if self.replicas:
                cands = np.concatenate([cands + k * self.omega_r for k in range(self.replicas + 1)])
            out[n] = cands[np.argmin(np.abs(cands - self.obs[n]))]
        return out


class DressedLineModel(_Grouped):
    """Dressed qubit-resonator line frequencies with the qubit frozen.

    A label (i -> j, +k photons) is the energy of the dressed state with the
    largest overlap on |j, k> minus that on |i, 0>; ``r:disp`` is |0, 1>.
    """

    def __init__(self, dataset: SpectroscopyDataset, qubit_params: QubitParams, options: FitOptions):
        super().__init__(dataset.points)
        self.n_photons = options.n_photons
        self.n_levels = options.n_qubit_levels
        self.n_candidates = options.n_candidates
        self.replicas = min(dataset.max_photon_replicas, self.n_photons - 2)
        dim = options.dim
        self.sectors = [
            coupled.qubit_sector(qubit_params.at_flux(phi), self.n_levels, dim) for phi in self.flux
        ]
        self.kinds = [p.kind for p in self.points]

    def _index(self, j, k):
        return j * self.n_photons + k

    def predict(self, g_c, g_l, omega_r) -> np.ndarray:
        out = np.empty(len(self.points))
        for g, sector in enumerate(self.sectors):
            h = coupled._assemble(sector, omega_r, g_c, g_l, self.n_photons)
            evals, vecs = np.linalg.eigh(h)
            owner = np.argmax(np.abs(vecs) ** 2, axis=1)  # product state -> dressed state

            def level(j, k):
                return evals[owner[self._index(j, k)]]

            ground = level(0, 0)
            for n in (m for m, gg in enumerate(self.group) if gg == g):
                lab = self.labels[n]
                if lab is not None:
                    if lab.resonator:
                        out[n] = level(0, 1) - ground
                    else:
                        out[n] = level(lab.j, lab.photons) - level(lab.i, 0)
                    continue
                if self.kinds[n] == RESONATOR_LINE:
                    cands = np.array([level(0, 1) - ground])
                else:
                    cands = np.array(
                        [level(j, k) - ground for k in range(self.replicas + 1) for j in range(1, self.n_candidates + 1)]
                    )
                out[n] = cands[np.argmin(np.abs(cands - self.obs[n]))]
        return out


def objective(model, params) -> float:
    """Weighted RSS sum w (f_obs - f_model)^2 in GHz^2.

    ``model`` binds a dataset to a spectrum function: it carries ``obs`` and
    ``weights`` and maps ``predict(*params)`` to one model frequency per point.
    Evaluation failures give a large finite penalty. The sum is exactly
    rounded, hence independent of point order.
    """
    try:
        pred = model.predict(*params)
    except (ValueError, np.linalg.LinAlgError, qubit.DiagonalizationError, FloatingPointError) as exc:
        log.debug("model evaluation failed at %s: %s", params, exc)
        return PENALTY
    terms = model.weights * (model.obs - pred) ** 2
    if not np.all(np.isfinite(terms)):
        return PENALTY
    return math.fsum(terms.tolist())


# --- optimizer ------------------------------------------------------------


def _nelder_mead(fun, x0, steps, fatol, xatol, max_iterations):
    x0 = np.asarray(x0, dtype=float)
    simplex = np.vstack([x0] + [x0 + np.eye(len(x0))[i] * steps[i] for i in range(len(x0))])
    history = []

    def callback(intermediate_result):
        f = float(intermediate_result.fun)
        history.append(min(f, history[-1]) if history else f)

    res = minimize(
        fun,
        x0,
        method="Nelder-Mead",
        callback=callback,
        options=dict(
            initial_simplex=simplex,
            adaptive=True,
            fatol=fatol,
            xatol=xatol,
            maxiter=max_iterations,
            maxfev=20 * max_iterations,
        ),
    )
    verts, fvals = res.final_simplex
    size = float(np.max(np.abs(verts[1:] - verts[0])))
    spread = float(np.max(np.abs(fvals - fvals[0])))
    converged = bool(res.success and size <= xatol and spread <= fatol)
    return res, history, size, converged


def _simplex_anisotropy(verts, scale):
    edges = (verts[1:] - verts[0]) / scale
    sv = np.linalg.svd(edges, compute_uv=False)
    if sv[-1] <= 0:
        return math.inf
    return float(sv[0] / sv[-1])


def _axis_uncertainty(fun, x, steps, rss, n_points):
    """Curvature along each axis: sigma = sqrt(2 s^2 / f''), s^2 = rss / dof."""
    dof = max(n_points - len(x), 1)
    s2 = rss / dof
    f0 = fun(x)
    out = []
    for i, h in enumerate(steps):
        e = np.zeros_like(x)
        e[i] = h
        d2 = (fun(x + e) + fun(x - e) - 2 * f0) / h**2
        out.append(math.sqrt(2 * s2 / d2) if d2 > 0 else math.inf)
    return out


# --- stage one ------------------------------------------------------------


def _check_qubit_data(dataset: SpectroscopyDataset):
    dataset.validate()
    pts = [p for p in dataset.points if p.kind == QUBIT_LINE]
    problems = []
    if len(pts) < 6:
        problems.append(f"need at least 6 qubit-line points, got {len(pts)}")
    if len({p.phi_ext for p in pts}) < 2:
        problems.append("qubit-line points must span at least 2 distinct flux values")
    if problems:
        raise DatasetError(problems)


def fitting_dim(dataset: SpectroscopyDataset, guess: QubitParams) -> int:
    """Largest auto-converged basis size over the dataset's flux values at ``guess``."""
    return max(qubit.converged_dim(guess.at_flux(phi)) for phi in dataset.flux_values)


def _fit_energies(model, x0, opts: FitOptions, step=0.1):
    def fun(x):
        return objective(model, np.exp(x))

    steps = np.full(len(x0), step)
    res, history, size, converged = _nelder_mead(fun, x0, steps, opts.fatol, opts.xatol_log, opts.max_iterations)
    return fun, res, history, size, converged


def fit_qubit_params(dataset: SpectroscopyDataset, initial: QubitParams, options: FitOptions | None = None) -> FitResult:
    """Fit (E_L, E_C, E_J) of the bare qubit to the qubit lines of ``dataset``."""
    opts = options or FitOptions()
    _check_qubit_data(dataset)
    if initial.e_j <= 0:
        raise ValueError("initial e_j must be positive (the fit runs in log-energies)")
    dim = opts.dim or fitting_dim(dataset, initial)
    model = QubitLineModel(dataset, dim, opts.n_candidates, opts.omega_r)
    starts = [np.log([initial.e_l, initial.e_c, initial.e_j])]
    warnings = []
    info = {"dim": dim}
    if opts.multistart:
        seed = 0 if opts.seed is None else opts.seed
        rng = np.random.default_rng(seed)
        info["seed"] = seed
        for _ in range(opts.multistart):
            starts.append(starts[0] + np.log(rng.uniform(0.8, 1.2, size=3)))
    best = None
    for x0 in starts:
        out = _fit_energies(model, x0, opts)
        if best is None or out[1].fun < best[1].fun:
            best = out
    fun, res, history, size, converged = best
    x = res.x
    if opts.verify_truncation:
        fine = QubitLineModel(dataset, 2 * dim, opts.n_candidates, opts.omega_r)
        # restart from the optimum with a small simplex
        _, res2, _, _, conv2 = _fit_energies(fine, x, opts, step=0.01)
        shift = float(np.max(np.abs(np.expm1(res2.x - x))))
        info["truncation_shift"] = shift
        if shift > opts.truncation_shift_limit:
            warnings.append(f"parameters moved by {shift:.2e} at doubled truncation; using the refined fit")
            model, fun, res, x, converged = fine, (lambda y: objective(fine, np.exp(y))), res2, res2.x, conv2
            info["dim"] = 2 * dim
    values = np.exp(x)
    sig_log = _axis_uncertainty(fun, x, np.full(3, 1e-3), float(res.fun), len(model.points))
    residuals = (model.obs - model.predict(*values)).tolist()
    if not converged:
        warnings.append(f"optimizer did not converge: {res.message}")
    return FitResult(
        params=dict(zip(ENERGY_NAMES, map(float, values))),
        uncertainties={k: float(v * s) for k, v, s in zip(ENERGY_NAMES, values, sig_log)},
        rss=float(res.fun),
        n_iterations=int(res.nit),
        converged=converged,
        residuals=residuals,
        history=history,
        simplex_size=size,
        warnings=warnings,
        info=info,
    )


# --- stage two ------------------------------------------------------------


def fit_coupling_params(
    dataset: SpectroscopyDataset,
    qubit_params: QubitParams,
    omega_r_bare: float,
    initial: tuple[float, float] = (0.05, 0.05),
    options: FitOptions | None = None,
    *,
    fix_omega_r: bool = True,
    model: DressedLineModel | None = None,
) -> FitResult:
    """Fit (g_c, g_l) in GHz with the qubit energies frozen.

    With ``fix_omega_r=False`` the bare resonator frequency is a third free
    parameter; that problem is degenerate, which the result reports through
    ``info["simplex_anisotropy"]`` and a warning. Only the relative sign of
    the couplings is observable, so results are reported with g_c >= 0.
    """
    opts = options or FitOptions()
    dataset.validate()
    model = model or DressedLineModel(dataset, qubit_params, opts)
    x0 = list(initial) + ([] if fix_omega_r else [omega_r_bare])
    names = ["g_c", "g_l"] + ([] if fix_omega_r else ["omega_r"])

    def fun(x):
        if fix_omega_r:
            return objective(model, (x[0], x[1], omega_r_bare))
        return objective(model, tuple(x))

    steps = np.array([max(0.1 * abs(v), 0.01) for v in x0])
    res, history, size, converged = _nelder_mead(fun, x0, steps, opts.fatol, opts.xatol_coupling, opts.max_iterations)
    x = res.x.copy()
    verts, _ = res.final_simplex
    if x[0] < 0:
        # (g_c, g_l) -> (-g_c, -g_l) leaves the spectrum unchanged; report g_c >= 0
        x[:2] = -x[:2]
    anis = _simplex_anisotropy(verts, np.maximum(np.abs(x), 1e-3))
    warnings = []
    if anis > opts.anisotropy_limit:
        warnings.append(f"residual surface is flat along one direction (simplex anisotropy {anis:.3g})")
    if not converged:
        warnings.append(f"optimizer did not converge: {res.message}")
    sig = _axis_uncertainty(fun, x, np.maximum(1e-3 * np.abs(x), 1e-4), float(res.fun), len(model.points))
    full = (x[0], x[1], omega_r_bare if fix_omega_r else x[2])
    return FitResult(
        params=dict(zip(names, map(float, x))),
        uncertainties=dict(zip(names, map(float, sig))),
        rss=float(res.fun),
        n_iterations=int(res.nit),
        converged=converged,
        residuals=(model.obs - model.predict(*full)).tolist(),
        history=history,
        simplex_size=size,
        warnings=warnings,
        info={"simplex_anisotropy": anis, "omega_r_fixed": bool(fix_omega_r), "omega_r": float(full[2])},
    )


def fit_pipeline(dataset: SpectroscopyDataset, initial: QubitParams, options: FitOptions | None = None):
    """Stage one, then stage two if a bare resonator frequency is known.

    The resonator frequency comes from ``options.omega_r`` or the dataset
    metadata key ``omega_r``. Returns ``(qubit_fit, coupling_fit_or_None)``.
    """
    opts = options or FitOptions()
    problems = dataset.problems()
    if problems:
        raise DatasetError(problems)
    stage1 = fit_qubit_params(dataset, initial, opts)
    omega_r = opts.omega_r if opts.omega_r is not None else dataset.meta.get("omega_r")
    if omega_r is None:
        return stage1, None
    fitted = QubitParams(**stage1.params)
    stage2 = fit_coupling_params(dataset, fitted, float(omega_r), opts.initial_couplings, opts)
    return stage1, stage2


def pipeline_report(stage1: FitResult, stage2: FitResult | None, extra: dict | None = None) -> str:
    report = {"schema_version": 1, "qubit_fit": stage1.to_dict(), "coupling_fit": stage2.to_dict() if stage2 else None}
    if extra:
        report.update(extra)
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
