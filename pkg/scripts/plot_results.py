"""Render figures from CLI outputs.

Usage::

    python scripts/plot_results.py OUTDIR

Looks for ``f.csv`` (from ``mollilap solve``) and ``rates.csv`` /
``rates_fit.csv`` (from ``mollilap rates``) in ``OUTDIR`` and writes PNG
files next to them. Needs matplotlib (``pip install artifact[plot]``).
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _columns(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [r[k] for r in rows] for k in rows[0]} if rows else {}


def plot_reconstruction(outdir):
    cols = _columns(outdir / "f.csv")
    t = np.array(cols["t"], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, np.array(cols["f_tilde_exact"], dtype=float), "k-", label="exact")
    ax.plot(t, np.array(cols["f_tilde"], dtype=float), "o", ms=3, label="reconstruction")
    ax.set_xlabel("t")
    ax.set_ylabel("exp(-ct) f(t)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(outdir / "reconstruction.png", dpi=150)
    plt.close(fig)


def plot_rates(outdir):
    cols = _columns(outdir / "rates.csv")
    fits = {(r_e, r_s): (float(a), float(b)) for r_e, r_s, a, b in zip(
        *(_columns(outdir / "rates_fit.csv")[k] for k in ("example", "solver", "slope", "intercept")))}
    fig, ax = plt.subplots(figsize=(6, 4))
    keys = sorted(set(zip(cols["example"], cols["solver"])))
    for key in keys:
        sel = [i for i, k in enumerate(zip(cols["example"], cols["solver"])) if k == key]
        x = np.array([cols["lnlninv_delta"][i] for i in sel], dtype=float)
        y = np.array([cols["ln_rel_err"][i] for i in sel], dtype=float)
        (line,) = ax.plot(x, y, "o", label=f"example {key[0]}, {key[1]}")
        if key in fits:
            slope, intercept = fits[key]
            ax.plot(x, slope * x + intercept, "-", color=line.get_color(), lw=1)
    ax.set_xlabel("ln(-ln delta)")
    ax.set_ylabel("ln Rel_err(f)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(outdir / "rates.png", dpi=150)
    plt.close(fig)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("outdir", type=Path)
    args = p.parse_args()
    done = False
    if (args.outdir / "f.csv").exists():
        plot_reconstruction(args.outdir)
        done = True
    if (args.outdir / "rates.csv").exists() and (args.outdir / "rates_fit.csv").exists():
        plot_rates(args.outdir)
        done = True
    if not done:
        raise SystemExit(f"no plottable CSV files in {args.outdir}")


if __name__ == "__main__":
    main()
