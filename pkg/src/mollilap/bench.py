"""End-to-end benchmark harness: error tables and logarithmic rate studies.

Every run takes a configuration dictionary as produced by
:mod:`mollilap.config`. For each ``(noise level, seed)`` cell the data are
sampled, perturbed, ``beta`` is selected by the discrepancy principle (or
fixed at ``bench.beta_noiseless`` for noise-free cells), the solution is
computed and ``exp(-c t) f(t)`` is compared with its closed form on the
cosine-inversion time grid.

CSV files
---------
``table.csv``
    example, solver, noise_pct, delta_abs, beta, residual, rel_err_u,
    rel_err_f, iters, seed. ``iters`` counts the regularized solves made for
    the row (ladder rungs evaluated, 1 for a fixed ``beta``); ``rel_err_u`` is
    empty for the spectral solver.
``rates.csv``
    example, solver, delta_abs, lnlninv_delta, ln_rel_err; one row per noise
    level, errors are medians over seeds.
``rates_fit.csv``
    example, solver, slope, intercept, fit_residual.

Floats are written with 17 significant digits so a round trip is exact.
"""

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .cauchy import (
    NormalEquations,
    RegularizedSolveConfig,
    reconstruct_f,
    reconstruction_grid,
    residual,
    solve_u_beta,
)
from .compact_fd import assemble_system
from .config import SOLVERS, default_config
from .errors import InputError, SolverError
from .examples import NoiseSpec, add_noise, example, sample_G, u_exact
from .grids import Field2D, RealSignal, l2_norm, make_grid2d, resample_linear
from .morozov import LadderStep, MorozovConfig, select_beta, select_beta_batch
from .spectral import (
    LogLaplaceOperator,
    add_spectral_noise,
    make_log_map,
    solve_spectral,
    spectral_data,
)

TABLE_COLUMNS = ("example", "solver", "noise_pct", "delta_abs", "beta", "residual",
                 "rel_err_u", "rel_err_f", "iters", "seed")
RATES_COLUMNS = ("example", "solver", "delta_abs", "lnlninv_delta", "ln_rel_err")
FIT_COLUMNS = ("example", "solver", "slope", "intercept", "fit_residual")


@dataclass
class RunReport:
    """Outcome of one ``(example, solver, noise level, seed)`` cell.

    ``status`` is ``"ok"`` or ``"error"``; failed cells keep their trace and
    the solver message, with NaN in the numeric result fields.
    """

    example_id: int
    solver: str
    noise_percent: float
    seed: int
    delta_abs: float
    beta_selected: float
    residual: float
    rel_err_u: float
    rel_err_f: float
    iterations: int
    wall_time: float
    x_row: float
    trace: List[LadderStep] = field(default_factory=list)
    status: str = "ok"
    message: str = ""

    def to_dict(self):
        d = asdict(self)
        d["trace"] = [list(s) for s in self.trace]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["trace"] = [LadderStep(int(k), float(b), float(r)) for k, b, r in d.get("trace", [])]
        return cls(**d)


@dataclass
class RunOutcome:
    """A report together with the arrays it was computed from."""

    report: RunReport
    f: Optional[RealSignal] = None
    f_ref: Optional[RealSignal] = None
    U: Optional[Field2D] = None


@dataclass(frozen=True)
class RatePoint:
    """One point ``(ln(-ln delta), ln rel_err)`` of a rate plot."""

    delta_abs: float
    x_coord: float
    y_coord: float

    @classmethod
    def from_error(cls, delta_abs, rel_err):
        if not 0 < delta_abs < 1:
            raise InputError("rate coordinates need 0 < delta < 1")
        if not rel_err > 0:
            raise InputError("rate coordinates need a positive error")
        return cls(float(delta_abs), math.log(-math.log(delta_abs)), math.log(rel_err))


@dataclass
class RateStudy:
    example_id: int
    solver: str
    points: List[RatePoint]
    slope: float
    intercept: float
    fit_residual: float
    reports: List[RunReport] = field(default_factory=list)


def rel_errors(U_ref, U, f_ref, f):
    """Relative ``l2`` errors of the field and of the reconstructed signal.

    ``U`` and ``U_ref`` may both be ``None`` (spectral runs); ``rel_err_u`` is
    then NaN. ``f`` is resampled linearly onto the grid of ``f_ref`` when the
    grids differ.
    """
    if (U is None) != (U_ref is None):
        raise InputError("give both fields or neither")
    if U is None:
        eu = float("nan")
    else:
        ref = l2_norm(U_ref.values)
        if ref == 0:
            raise InputError("reference field has zero norm")
        if U.values.shape != U_ref.values.shape:
            raise InputError("fields live on different grids")
        eu = l2_norm(U.values - U_ref.values) / ref
    ref = l2_norm(f_ref.values)
    if ref == 0:
        raise InputError("reference signal has zero norm")
    fv = f.values if f.grid == f_ref.grid else resample_linear(f, f_ref.grid).values
    return eu, l2_norm(fv - f_ref.values) / ref


def morozov_config(cfg):
    m = cfg["morozov"]
    return MorozovConfig(m["tau"], m["q"], m["beta0"], m["max_steps"])


def search_mode(cfg, solver):
    s = cfg["morozov"]["search"]
    if s != "auto":
        return s
    return "bisect" if solver == "cauchy" else "linear"


def solve_config(cfg, beta):
    s = cfg["solver"]
    return RegularizedSolveConfig(beta, s["method"], s["cg_tol"], s["cg_maxit"], s["preconditioner"])


def _grid_for(ex, cfg):
    g = cfg["grid"]
    c = ex.c if g["c"] is None else g["c"]
    return make_grid2d(c, g["L_x"], g["L_y"], g["h_x"], g["h_y"])


def _f_reference(ex, tgrid):
    return RealSignal(tgrid, ex.f_tilde(tgrid.nodes))


class _CauchyCase:
    """Fixed pieces of the Cauchy pipeline for one example."""

    def __init__(self, ex, cfg):
        self.ex, self.cfg = ex, cfg
        self.grid = _grid_for(ex, cfg)
        self.G = sample_G(ex, self.grid.xgrid)
        self.sys = assemble_system(self.grid, self.G)
        self.normal = NormalEquations(self.sys, cfg["mollifier"]["pad_factor"])
        self.U_ref = u_exact(ex, self.grid)
        r = cfg["reconstruction"]
        tgrid, _ = reconstruction_grid(self.grid.ygrid, pad=r["pad"], t_max=r["t_max"])
        self.f_ref = _f_reference(ex, tgrid)

    def data(self, level, seed):
        Gd, delta = add_noise(self.G, NoiseSpec(level, seed))
        B = np.zeros(self.grid.shape)
        B[0] = Gd.values
        return B, delta

    def finish(self, level, seed, delta, U, res, beta, trace, wall):
        r = self.cfg["reconstruction"]
        rec = reconstruct_f(U, self.grid.xgrid.start, pad=r["pad"], t_max=r["t_max"])
        f = RealSignal(rec.tgrid, rec.values)
        eu, ef = rel_errors(self.U_ref, U, self.f_ref, f)
        rep = RunReport(self.ex.id, "cauchy", level, seed, delta, beta, res, eu, ef,
                        max(len(trace), 1), wall, rec.x_row, trace)
        return RunOutcome(rep, f, self.f_ref, U)

    def failed(self, level, seed, delta, err, wall):
        trace = err.payload if isinstance(err.payload, list) else []
        nan = float("nan")
        rep = RunReport(self.ex.id, "cauchy", level, seed, delta, nan, nan, nan, nan,
                        len(trace), wall, self.grid.xgrid.start, trace, "error", str(err))
        return RunOutcome(rep)


def _cauchy_fixed(case, cells, beta):
    """Solve every cell at one ``beta`` with a shared factorization."""
    t0 = time.perf_counter()
    data = [case.data(level, seed) for level, seed in cells]
    sols = _cauchy_solve_many(case, beta, [B for B, _ in data])
    wall = (time.perf_counter() - t0) / max(len(cells), 1)
    out = []
    for (level, seed), (B, delta), U in zip(cells, data, sols):
        if isinstance(U, SolverError):
            out.append(case.failed(level, seed, delta, U, wall))
            continue
        res = residual(case.sys, U, B)
        out.append(case.finish(level, seed, delta, U, res, beta, [], wall))
    return out


def _cauchy_solve_many(case, beta, rhs_blocks):
    """Regularized solutions for several right-hand sides at one ``beta``."""
    scfg = solve_config(case.cfg, beta)
    if scfg.method == "direct":
        fac = case.normal.factor(beta)
        R = np.column_stack([case.normal.rhs(B) for B in rhs_blocks])
        X = fac.solve(R)
        return [Field2D(case.grid, X[:, j]) for j in range(X.shape[1])]
    out = []
    for B in rhs_blocks:
        try:
            U, _ = solve_u_beta(case.sys, B, scfg, normal=case.normal)
            out.append(U)
        except SolverError as err:
            out.append(err)
    return out


def _cauchy_morozov(case, cells):
    cfg = case.cfg
    mcfg = morozov_config(cfg)
    search = search_mode(cfg, "cauchy")
    data = [case.data(level, seed) for level, seed in cells]
    t0 = time.perf_counter()
    if cfg["solver"]["method"] == "direct":
        def solve_many(beta, idx):
            sols = _cauchy_solve_many(case, beta, [data[i][0] for i in idx])
            return [(U, residual(case.sys, U, data[i][0])) for i, U in zip(idx, sols)]

        results = select_beta_batch(solve_many, [d for _, d in data], mcfg, search)
        wall = (time.perf_counter() - t0) / max(len(cells), 1)
    else:
        results, walls = [], []
        warm = cfg["solver"]["warm_start"]
        for B, delta in data:
            t1 = time.perf_counter()
            last = [None]

            def solve(beta, B=B, last=last):
                U, _ = solve_u_beta(case.sys, B, solve_config(cfg, beta), normal=case.normal,
                                    x0=last[0])
                if warm:
                    last[0] = U.values
                return U, residual(case.sys, U, B)

            try:
                results.append(select_beta(solve, delta, mcfg, search))
            except SolverError as err:
                results.append(err)
            walls.append(time.perf_counter() - t1)
        wall = float(np.mean(walls)) if walls else 0.0
    out = []
    for (level, seed), (_, delta), r in zip(cells, data, results):
        if isinstance(r, SolverError):
            out.append(case.failed(level, seed, delta, r, wall))
        else:
            out.append(case.finish(level, seed, delta, r.solution, r.residual, r.beta, r.trace, wall))
    return out


class _SpectralCase:
    """Fixed pieces of the spectral pipeline for one example."""

    def __init__(self, ex, cfg):
        self.ex, self.cfg = ex, cfg
        sp = cfg["spectral"]
        self.lmap = make_log_map(sp["u_max"], sp["count"])
        c = ex.c if cfg["grid"]["c"] is None else cfg["grid"]["c"]
        self.clean = spectral_data(ex.g, self.lmap, c=c)
        self.op = LogLaplaceOperator(self.lmap)
        grid = _grid_for(ex, cfg)
        r = cfg["reconstruction"]
        tgrid, _ = reconstruction_grid(grid.ygrid, pad=r["pad"], t_max=r["t_max"])
        self.f_ref = _f_reference(ex, tgrid)

    def data(self, level, seed):
        return add_spectral_noise(self.clean, NoiseSpec(level, seed), self.op)

    def run(self, level, seed, beta=None):
        t0 = time.perf_counter()
        data = self.data(level, seed)
        trace = []
        try:
            if beta is None:
                sel = select_beta(lambda b: _spectral_pair(data, b), data.delta,
                                  morozov_config(self.cfg), search_mode(self.cfg, "spectral"))
                sol, trace = sel.solution, sel.trace
            else:
                sol = solve_spectral(data, beta)
        except SolverError as err:
            nan = float("nan")
            trace = err.payload if isinstance(err.payload, list) else []
            rep = RunReport(self.ex.id, "spectral", level, seed, data.delta, nan, nan, nan, nan,
                            len(trace), time.perf_counter() - t0, data.shift, trace,
                            "error", str(err))
            return RunOutcome(rep)
        tgrid = self.f_ref.grid
        f = RealSignal(tgrid, sol.at(tgrid.nodes))
        _, ef = rel_errors(None, None, self.f_ref, f)
        rep = RunReport(self.ex.id, "spectral", level, seed, data.delta, sol.beta, sol.residual,
                        float("nan"), ef, max(len(trace), 1), time.perf_counter() - t0,
                        data.shift, trace)
        return RunOutcome(rep, f, self.f_ref, None)


def _spectral_pair(data, beta):
    sol = solve_spectral(data, beta)
    return sol, sol.residual


def run_cells(example_id, solver, cells, cfg=None, beta=None):
    """Run ``(level, seed)`` cells and keep the computed arrays.

    Parameters
    ----------
    example_id : int
    solver : {"cauchy", "spectral"}
    cells : list of (float, int)
        Noise level in percent and seed.
    cfg : dict, optional
        Validated configuration; defaults to :func:`mollilap.config.default_config`.
    beta : float, optional
        Fixed ``beta`` for every cell. Otherwise noisy cells use the
        discrepancy principle and noise-free cells ``bench.beta_noiseless``.

    Returns
    -------
    list of RunOutcome
        In the order of ``cells``.
    """
    cfg = cfg or default_config()
    if solver not in SOLVERS:
        raise InputError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    ex = example(example_id)
    cells = [(float(level), int(seed)) for level, seed in cells]
    if any(level < 0 for level, _ in cells):
        raise InputError("noise levels must be >= 0")
    floor = cfg["bench"]["beta_noiseless"]
    if solver == "spectral":
        case = _SpectralCase(ex, cfg)
        return [case.run(level, seed, beta if beta is not None else (floor if level == 0 else None))
                for level, seed in cells]
    case = _CauchyCase(ex, cfg)
    out = [None] * len(cells)
    if beta is not None:
        groups = {beta: list(range(len(cells)))}
        noisy = []
    else:
        groups = {floor: [i for i, (lv, _) in enumerate(cells) if lv == 0]}
        noisy = [i for i, (lv, _) in enumerate(cells) if lv > 0]
    for b, idx in groups.items():
        if idx:
            for i, o in zip(idx, _cauchy_fixed(case, [cells[i] for i in idx], b)):
                out[i] = o
    if noisy:
        for i, o in zip(noisy, _cauchy_morozov(case, [cells[i] for i in noisy])):
            out[i] = o
    return out


def run_example(example_id, solver, noise_levels, seeds, cfg=None):
    """Error table rows for every ``(level, seed)`` pair, levels outermost."""
    cells = [(level, seed) for level in noise_levels for seed in seeds]
    return [o.report for o in run_cells(example_id, solver, cells, cfg)]


def median_errors(reports, key="rel_err_f"):
    """Median of ``key`` over seeds per ``(example, solver, noise level)``.

    Failed rows are skipped; a group with no successful row maps to NaN.
    """
    groups = {}
    for r in reports:
        groups.setdefault((r.example_id, r.solver, r.noise_percent), []).append(r)
    out = {}
    for k, rs in groups.items():
        vals = [getattr(r, key) for r in rs if r.status == "ok"]
        out[k] = float(np.median(vals)) if vals else float("nan")
    return out


def fit_rates(x, y):
    """Least-squares line ``y = slope x + intercept``; returns ``(slope, intercept, rms)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("x and y must be 1-D of equal length")
    if x.size < 3:
        raise InputError("a rate fit needs at least 3 points")
    if np.ptp(x) == 0:
        raise InputError("all points share one abscissa")
    slope, intercept = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), rms


def rates_from_reports(reports):
    """Build a :class:`RateStudy` from the rows of one example and solver."""
    keys = {(r.example_id, r.solver) for r in reports}
    if len(keys) != 1:
        raise InputError("rate study needs rows of exactly one example and solver")
    (eid, solver), = keys
    med = median_errors(reports)
    deltas = {}
    for r in reports:
        deltas.setdefault(r.noise_percent, r.delta_abs)
    points = []
    for (_, _, level), err in sorted(med.items(), key=lambda kv: -kv[0][2]):
        if level == 0 or not np.isfinite(err):
            continue
        points.append(RatePoint.from_error(deltas[level], err))
    slope, intercept, rms = fit_rates([p.x_coord for p in points], [p.y_coord for p in points])
    return RateStudy(eid, solver, points, slope, intercept, rms, list(reports))


def rate_study(example_id, solver, deltas, seeds, cfg=None):
    """Median error over seeds per noise level and the fitted rate line.

    Parameters
    ----------
    deltas : list of float
        Noise levels in percent of the data norm; the absolute ``delta`` of
        each must stay below 1.
    """
    if len(deltas) < 3:
        raise InputError("a rate study needs at least 3 noise levels")
    if any(not d > 0 for d in deltas):
        raise InputError("rate-study noise levels must be positive")
    return rates_from_reports(run_example(example_id, solver, deltas, seeds, cfg))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else f"{v:.17g}"


def _write(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def _table_row(r):
    return (r.example_id, r.solver, r.noise_percent, r.delta_abs, r.beta_selected, r.residual,
            r.rel_err_u, r.rel_err_f, r.iterations, r.seed)


def write_table_csv(reports, path):
    _write(path, TABLE_COLUMNS, [_table_row(r) for r in reports])


def write_rates_csv(studies, path):
    rows = [(s.example_id, s.solver, p.delta_abs, p.x_coord, p.y_coord)
            for s in studies for p in s.points]
    _write(path, RATES_COLUMNS, rows)


def write_rates_fit_csv(studies, path):
    rows = [(s.example_id, s.solver, s.slope, s.intercept, s.fit_residual) for s in studies]
    _write(path, FIT_COLUMNS, rows)


def read_csv(path):
    """Rows of a harness CSV as dictionaries with numeric fields parsed."""
    ints = {"example", "iters", "seed"}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {}
            for k, v in row.items():
                if k == "solver":
                    rec[k] = v
                elif k in ints:
                    rec[k] = int(v)
                else:
                    rec[k] = float(v) if v != "" else float("nan")
            out.append(rec)
    return out


def write_report_json(report, path):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, allow_nan=True)


def read_report_json(path):
    with open(path) as fh:
        return RunReport.from_dict(json.load(fh))
