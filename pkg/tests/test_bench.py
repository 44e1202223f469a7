import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mollilap import bench
from mollilap.config import default_config
from mollilap.errors import InputError
from mollilap.grids import Field2D, Grid1D, RealSignal
from mollilap.morozov import LadderStep, MorozovConfig, MorozovResult, check_bracket

GOLDEN = Path(__file__).parent / "golden"


def _small_cfg():
    cfg = default_config()
    cfg["grid"].update(L_x=2.0, L_y=1.0, h_x=0.25, h_y=0.05)
    return cfg


def _report(**kw):
    base = dict(example_id=1, solver="cauchy", noise_percent=0.1, seed=0, delta_abs=1.5e-3,
                beta_selected=0.012, residual=1.4e-3, rel_err_u=0.3, rel_err_f=0.2, iterations=12,
                wall_time=0.5, x_row=0.0,
                trace=[LadderStep(0, 1e3, 2.0), LadderStep(1, 980.0, 1.0 / 3.0)])
    base.update(kw)
    return bench.RunReport(**base)


@pytest.fixture(scope="module")
def small_reports():
    return bench.run_example(1, "cauchy", [0.0, 0.1, 1.0, 5.0], [0, 1], _small_cfg())


# ----- errors ----------------------------------------------------------------

def test_rel_errors_trivial(grid53, ex1_u):
    tg = Grid1D(0.1, 0.1, 50)
    f_ref = RealSignal(tg, np.sin(tg.nodes) + 2.0)
    eu, ef = bench.rel_errors(ex1_u, ex1_u, f_ref, f_ref)
    assert eu == 0.0 and ef == 0.0
    zero = Field2D(grid53, np.zeros(grid53.shape))
    eu, ef = bench.rel_errors(ex1_u, zero, f_ref, RealSignal(tg, np.zeros(50)))
    assert eu == pytest.approx(1.0, abs=1e-15) and ef == pytest.approx(1.0, abs=1e-15)
    eu, ef = bench.rel_errors(ex1_u, Field2D(grid53, 1.1 * ex1_u.values), f_ref,
                              RealSignal(tg, 1.1 * f_ref.values))
    assert eu == pytest.approx(0.1, abs=1e-12) and ef == pytest.approx(0.1, abs=1e-12)


def test_rel_errors_rejects_zero_reference(grid53, ex1_u):
    tg = Grid1D(0.0, 1.0, 4)
    with pytest.raises(InputError):
        bench.rel_errors(None, None, RealSignal(tg, np.zeros(4)), RealSignal(tg, np.ones(4)))
    zero = Field2D(grid53, np.zeros(grid53.shape))
    with pytest.raises(InputError):
        bench.rel_errors(zero, ex1_u, RealSignal(tg, np.ones(4)), RealSignal(tg, np.ones(4)))


def test_rel_errors_spectral_has_no_field():
    tg = Grid1D(0.0, 1.0, 4)
    eu, ef = bench.rel_errors(None, None, RealSignal(tg, np.ones(4)), RealSignal(tg, np.ones(4)))
    assert math.isnan(eu) and ef == 0.0


def test_rel_errors_resamples():
    fine = Grid1D(0.0, 0.01, 101)
    coarse = Grid1D(0.0, 0.1, 11)
    f_ref = RealSignal(coarse, 1.0 + coarse.nodes)
    f = RealSignal(fine, 1.0 + fine.nodes)
    assert bench.rel_errors(None, None, f_ref, f)[1] <= 1e-14


# ----- rates -----------------------------------------------------------------

def test_fit_exact_power_law():
    delta = np.array([1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
    pts = [bench.RatePoint.from_error(d, (-np.log(d)) ** -2.0) for d in delta]
    slope, intercept, rms = bench.fit_rates([p.x_coord for p in pts], [p.y_coord for p in pts])
    assert abs(slope + 2.0) <= 1e-10
    assert abs(intercept) <= 1e-10
    assert rms <= 1e-10


def test_fit_needs_three_points():
    with pytest.raises(InputError):
        bench.fit_rates([1.0, 2.0], [0.0, 1.0])
    with pytest.raises(InputError):
        bench.fit_rates([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])


@pytest.mark.parametrize("delta", [1.0, 2.0, 0.0, -0.1])
def test_rate_point_domain(delta):
    with pytest.raises(InputError):
        bench.RatePoint.from_error(delta, 0.1)


def test_rate_point_needs_positive_error():
    with pytest.raises(InputError):
        bench.RatePoint.from_error(0.1, 0.0)


def test_rate_study_needs_three_levels():
    with pytest.raises(InputError):
        bench.rate_study(1, "cauchy", [0.1, 0.01], [0])


# ----- aggregation -----------------------------------------------------------

@settings(max_examples=50)
@given(st.lists(st.floats(1e-6, 10.0), min_size=1, max_size=9), st.randoms(use_true_random=False))
def test_median_permutation_invariant(errs, rnd):
    reports = [_report(seed=i, rel_err_f=e) for i, e in enumerate(errs)]
    shuffled = list(reports)
    rnd.shuffle(shuffled)
    a = bench.median_errors(reports)
    b = bench.median_errors(shuffled)
    assert a == b
    assert a[(1, "cauchy", 0.1)] == pytest.approx(float(np.median(errs)), rel=1e-15)


def test_median_skips_failed_rows():
    nan = float("nan")
    reports = [_report(rel_err_f=0.3), _report(seed=1, rel_err_f=nan, status="error"),
               _report(seed=2, rel_err_f=0.5)]
    assert bench.median_errors(reports)[(1, "cauchy", 0.1)] == pytest.approx(0.4)
    only_failed = [_report(rel_err_f=nan, status="error")]
    assert math.isnan(bench.median_errors(only_failed)[(1, "cauchy", 0.1)])


# ----- serialization ---------------------------------------------------------

def test_report_json_round_trip(tmp_path):
    rep = _report(beta_selected=0.1 + 0.2, delta_abs=1.0 / 3.0)
    bench.write_report_json(rep, tmp_path / "r.json")
    back = bench.read_report_json(tmp_path / "r.json")
    assert back == rep
    assert all(isinstance(s, LadderStep) for s in back.trace)


def test_report_json_round_trip_nan(tmp_path):
    nan = float("nan")
    rep = _report(rel_err_u=nan, status="error", message="discrepancy never met")
    bench.write_report_json(rep, tmp_path / "r.json")
    back = bench.read_report_json(tmp_path / "r.json")
    assert math.isnan(back.rel_err_u)
    assert back.status == "error" and back.message == rep.message


def test_table_csv_round_trip(tmp_path):
    reps = [_report(seed=s, rel_err_f=1.0 / (s + 3.0), delta_abs=np.pi * 1e-4) for s in range(3)]
    reps.append(_report(solver="spectral", rel_err_u=float("nan"), seed=9))
    bench.write_table_csv(reps, tmp_path / "table.csv")
    rows = bench.read_csv(tmp_path / "table.csv")
    assert len(rows) == 4
    for r, row in zip(reps, rows):
        assert row["example"] == r.example_id and row["solver"] == r.solver
        assert row["seed"] == r.seed and row["iters"] == r.iterations
        assert row["rel_err_f"] == r.rel_err_f and row["delta_abs"] == r.delta_abs
        assert row["beta"] == r.beta_selected and row["residual"] == r.residual
    assert math.isnan(rows[-1]["rel_err_u"])


def test_rates_csv_round_trip(tmp_path):
    pts = [bench.RatePoint.from_error(d, e) for d, e in ((1e-2, 0.3), (1e-3, 0.2), (1e-4, 0.15))]
    xs, ys = [p.x_coord for p in pts], [p.y_coord for p in pts]
    study = bench.RateStudy(2, "spectral", pts, *bench.fit_rates(xs, ys))
    bench.write_rates_csv([study], tmp_path / "rates.csv")
    bench.write_rates_fit_csv([study], tmp_path / "rates_fit.csv")
    rows = bench.read_csv(tmp_path / "rates.csv")
    assert [r["lnlninv_delta"] for r in rows] == xs
    assert [r["ln_rel_err"] for r in rows] == ys
    fit = bench.read_csv(tmp_path / "rates_fit.csv")[0]
    assert (fit["slope"], fit["intercept"], fit["fit_residual"]) == (
        study.slope, study.intercept, study.fit_residual)


@pytest.mark.parametrize("name, writer", [
    ("table", lambda p: bench.write_table_csv([], p)),
    ("rates", lambda p: bench.write_rates_csv([], p)),
    ("rates_fit", lambda p: bench.write_rates_fit_csv([], p)),
])
def test_golden_headers(tmp_path, name, writer):
    writer(tmp_path / f"{name}.csv")
    assert (tmp_path / f"{name}.csv").read_text() == (GOLDEN / f"{name}.header").read_text()


def test_floats_written_with_17_digits(tmp_path):
    bench.write_table_csv([_report(delta_abs=0.1)], tmp_path / "t.csv")
    line = (tmp_path / "t.csv").read_text().splitlines()[1]
    assert "0.10000000000000001" in line


# ----- harness ---------------------------------------------------------------

def test_unknown_solver_rejected():
    with pytest.raises(InputError):
        bench.run_example(1, "talbot", [0.1], [0])


def test_negative_level_rejected():
    with pytest.raises(InputError):
        bench.run_cells(1, "cauchy", [(-1.0, 0)])


def test_run_example_layout(small_reports):
    assert len(small_reports) == 4 * 2
    assert [r.noise_percent for r in small_reports] == [0.0, 0.0, 0.1, 0.1, 1.0, 1.0, 5.0, 5.0]
    assert [r.seed for r in small_reports] == [0, 1] * 4
    assert all(r.status == "ok" for r in small_reports)
    assert all(r.rel_err_u >= 0 and r.rel_err_f >= 0 and r.beta_selected > 0 for r in small_reports)


def test_noiseless_rows_use_fixed_beta(small_reports):
    for r in small_reports[:2]:
        assert r.beta_selected == 1e-9
        assert r.delta_abs == 0.0 and r.trace == [] and r.iterations == 1


def test_reports_satisfy_bracket(small_reports):
    cfg = MorozovConfig()
    for r in small_reports[2:]:
        sel = _as_result(r)
        assert check_bracket(sel, r.delta_abs, cfg)
        assert r.residual <= 1.01 * r.delta_abs
        assert r.iterations == len(r.trace)


def _as_result(rep):
    idx = next(s.index for s in rep.trace if s.beta == rep.beta_selected)
    return MorozovResult(rep.beta_selected, idx, None, rep.residual, rep.trace)


def test_deterministic_per_seed():
    cfg = _small_cfg()
    a = bench.run_example(1, "cauchy", [1.0], [3], cfg)[0]
    b = bench.run_example(1, "cauchy", [1.0], [3], cfg)[0]
    assert (a.beta_selected, a.residual, a.rel_err_f, a.trace) == (
        b.beta_selected, b.residual, b.rel_err_f, b.trace)


def test_batched_equals_single_cell():
    cfg = _small_cfg()
    together = bench.run_example(1, "cauchy", [0.1, 1.0], [0, 1], cfg)
    alone = bench.run_example(1, "cauchy", [1.0], [1], cfg)[0]
    match = together[3]
    assert match.beta_selected == alone.beta_selected
    assert match.rel_err_f == pytest.approx(alone.rel_err_f, rel=1e-12)


def test_rates_from_reports_skips_noiseless(small_reports):
    study = bench.rates_from_reports(small_reports)
    assert len(study.points) == 3
    assert [p.delta_abs for p in study.points] == sorted((p.delta_abs for p in study.points),
                                                         reverse=True)
    assert np.isfinite(study.slope)


def test_rates_from_reports_needs_one_case(small_reports):
    mixed = list(small_reports) + [_report(solver="spectral")]
    with pytest.raises(InputError):
        bench.rates_from_reports(mixed)


def test_spectral_row(tmp_path):
    cfg = default_config()
    cfg["spectral"].update(count=4096)
    out = bench.run_cells(1, "spectral", [(0.1, 0)], cfg)[0]
    rep = out.report
    assert rep.status == "ok" and math.isnan(rep.rel_err_u)
    assert rep.iterations == len(rep.trace)
    assert rep.residual <= 1.01 * rep.delta_abs
    assert out.f.grid == out.f_ref.grid


@pytest.mark.slow
@pytest.mark.parametrize("solver", ["cauchy", "spectral"])
def test_noiseless_row_not_worse_than_noisy(solver):
    reps = bench.run_example(1, solver, [0.0, 0.1], [0, 1, 2, 3, 4], default_config())
    med = bench.median_errors(reps)
    assert med[(1, solver, 0.0)] <= med[(1, solver, 0.1)]
