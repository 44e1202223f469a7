"""Command-line entry point.

Subcommands write their artifacts into the output directory, chosen by
``--out``, then the ``MOLLILAP_OUTPUT_DIR`` environment variable, then
``output.dir`` of the configuration. Every run also writes the resolved
configuration as ``config_used.yaml`` so it can be replayed with
``--config``.

Exit codes: 0 on success, 2 for configuration or input errors, 3 when a
solver fails (or a self-test check fails).
"""

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import bench
from .config import SOLVERS, default_config, dump_config, load_config, set_key, validate
from .errors import ConfigError, InputError, SolverError
from .examples import example, sample_G, u_exact
from .grids import make_grid2d

ENV_OUTPUT = "MOLLILAP_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="complete YAML configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key, e.g. morozov.tau=1.05")

    p = argparse.ArgumentParser(prog="mollilap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", parents=[common], help="sample G and u_exact to CSV")
    f.add_argument("--example", type=int, required=True)

    s = sub.add_parser("solve", parents=[common], help="one full reconstruction")
    s.add_argument("--example", type=int, required=True)
    s.add_argument("--solver", choices=SOLVERS)
    s.add_argument("--beta", help="positive number or 'morozov'")
    s.add_argument("--noise", type=float, default=0.0, help="noise level in percent")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tau", type=float, help="discrepancy factor (morozov.tau)")
    s.add_argument("--q", type=float, help="ladder ratio (morozov.q)")
    s.add_argument("--beta0", type=float, help="first rung (morozov.beta0)")

    sub.add_parser("bench", parents=[common], help="error table over noise levels and seeds")
    sub.add_parser("rates", parents=[common], help="logarithmic rate study")
    sub.add_parser("selftest", help="fast randomized consistency checks")
    return p


def resolve_config(args):
    """Configuration after file loading, ``--set`` and flag overrides."""
    cfg = load_config(args.config) if args.config else default_config()
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        set_key(cfg, key.strip(), yaml.safe_load(raw))
    if getattr(args, "solver", None):
        cfg["solver"]["name"] = args.solver
    for flag in ("tau", "q", "beta0"):
        if getattr(args, flag, None) is not None:
            cfg["morozov"][flag] = getattr(args, flag)
    beta = getattr(args, "beta", None)
    if beta is not None:
        try:
            cfg["mollifier"]["beta"] = beta if beta == "morozov" else float(beta)
        except ValueError:
            raise ConfigError(f"invalid value for 'mollifier.beta': {beta!r}") from None
    out = args.out or os.environ.get(ENV_OUTPUT) or cfg["output"]["dir"]
    cfg["output"]["dir"] = str(out)
    return validate(cfg)


def _outdir(cfg):
    d = Path(cfg["output"]["dir"])
    d.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, d / "config_used.yaml")
    return d


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{float(v):.17g}" for v in r])


def cmd_forward(example_id, cfg):
    ex = example(example_id)
    g = cfg["grid"]
    grid = make_grid2d(ex.c if g["c"] is None else g["c"], g["L_x"], g["L_y"], g["h_x"], g["h_y"])
    out = _outdir(cfg)
    G = sample_G(ex, grid.xgrid)
    _write_rows(out / "G.csv", ("x", "g"), zip(grid.xgrid.nodes, G.values))
    U = u_exact(ex, grid)
    X, Y = np.meshgrid(grid.xgrid.nodes, grid.ygrid.nodes)
    _write_rows(out / "u_exact.csv", ("x", "y", "u"), zip(X.ravel(), Y.ravel(), U.values.ravel()))
    print(f"wrote G.csv and u_exact.csv for example {example_id} to {out}")
    return EXIT_OK


def cmd_solve(example_id, noise, seed, cfg):
    out = _outdir(cfg)
    beta = cfg["mollifier"]["beta"]
    fixed = None if beta == "morozov" else float(beta)
    if fixed is None and noise == 0:
        print(f"noise-free data: using beta = {cfg['bench']['beta_noiseless']:g} instead of "
              "the discrepancy principle")
    solver = cfg["solver"]["name"]
    outcome = bench.run_cells(example_id, solver, [(noise, seed)], cfg, beta=fixed)[0]
    rep = outcome.report
    bench.write_report_json(rep, out / "report.json")
    if rep.trace:
        _write_rows(out / "trace.csv", ("index", "beta", "residual"), rep.trace)
    if rep.status != "ok":
        print(f"solver failed: {rep.message}", file=sys.stderr)
        return EXIT_SOLVER
    _write_rows(out / "f.csv", ("t", "f_tilde", "f_tilde_exact"),
                zip(outcome.f.grid.nodes, outcome.f.values, outcome.f_ref.values))
    if outcome.U is not None:
        grid = outcome.U.grid
        X, Y = np.meshgrid(grid.xgrid.nodes, grid.ygrid.nodes)
        _write_rows(out / "u.csv", ("x", "y", "u"),
                    zip(X.ravel(), Y.ravel(), outcome.U.values.ravel()))
    print(f"example {example_id} {solver}: beta = {rep.beta_selected:.6g}, "
          f"residual = {rep.residual:.3e}, Rel_err(f) = {rep.rel_err_f:.4g}"
          + (f", Rel_err(u) = {rep.rel_err_u:.4g}" if solver == "cauchy" else ""))
    return EXIT_OK


def cmd_bench(cfg):
    out = _outdir(cfg)
    b = cfg["bench"]
    reports = []
    for eid in b["examples"]:
        for solver in b["solvers"]:
            rows = bench.run_example(eid, solver, b["noise_levels"], b["seeds"], cfg)
            reports += rows
            for (_, _, level), med in sorted(bench.median_errors(rows).items()):
                print(f"example {eid} {solver} noise {level:g}%: median Rel_err(f) = {med:.4g}")
    bench.write_table_csv(reports, out / "table.csv")
    _report_failures(reports)
    return EXIT_OK


def cmd_rates(cfg):
    out = _outdir(cfg)
    b = cfg["bench"]
    studies, reports = [], []
    for eid in b["examples"]:
        for solver in b["solvers"]:
            st = bench.rate_study(eid, solver, b["deltas"], b["seeds"], cfg)
            studies.append(st)
            reports += st.reports
            print(f"example {eid} {solver}: slope {st.slope:.4f}, fit residual {st.fit_residual:.4f}")
    bench.write_rates_csv(studies, out / "rates.csv")
    bench.write_rates_fit_csv(studies, out / "rates_fit.csv")
    bench.write_table_csv(reports, out / "rates_runs.csv")
    _report_failures(reports)
    return EXIT_OK


def _report_failures(reports):
    bad = [r for r in reports if r.status != "ok"]
    for r in bad:
        print(f"row failed (example {r.example_id}, {r.solver}, noise {r.noise_percent:g}%, "
              f"seed {r.seed}): {r.message}", file=sys.stderr)


def cmd_selftest():
    from .selftest import run_selftest

    return EXIT_OK if run_selftest() else EXIT_SOLVER


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return cmd_selftest()
        cfg = resolve_config(args)
        if args.command == "forward":
            return cmd_forward(args.example, cfg)
        if args.command == "solve":
            return cmd_solve(args.example, args.noise, args.seed, cfg)
        if args.command == "bench":
            return cmd_bench(cfg)
        return cmd_rates(cfg)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
