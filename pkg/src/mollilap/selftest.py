"""Fast randomized consistency checks, runnable from an installed package.

Each check returns ``(passed, detail)``. :func:`run_selftest` runs them all
and prints one line per check.
"""

import numpy as np

from .cauchy import NormalEquations
from .compact_fd import apply_A, apply_A_transpose, assemble_system, build_compact, second_derivative
from .examples import example, sample_G
from .grids import Field2D, make_grid2d
from .mollifier import MollifierSpec, apply_C_beta_2d, conv_matrix_2d
from .morozov import MorozovConfig, select_beta
from .spectral import SQRT_2PI, f_q, k_hat, operator_norm


def _cauchy_system():
    grid = make_grid2d(0.0, 7.0, 4.0, 0.25, 0.025)
    return assemble_system(grid, sample_G(example(1), grid.xgrid))


def check_multiplier_identity():
    v = SQRT_2PI * k_hat(0.0)
    err = abs(v - np.pi)
    return err <= 1e-12, f"|sqrt(2 pi) k_hat(0) - pi| = {err:.2e}"


def check_operator_norm():
    norm, it = operator_norm()
    rel = abs(norm - np.sqrt(np.pi)) / np.sqrt(np.pi)
    return rel <= 0.02, f"||L|| = {norm:.6f} ({it} iterations), relative gap {rel:.2e}"


def check_adjoint(trials=20, seed=0):
    sys = _cauchy_system()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        U = rng.standard_normal(sys.grid.shape)
        V = rng.standard_normal(sys.grid.shape)
        lhs = np.vdot(apply_A(sys, U), V)
        rhs = np.vdot(U, apply_A_transpose(sys, V))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    return worst <= 1e-10, f"worst relative adjoint gap {worst:.2e}"


def check_normal_symmetry(trials=20, seed=1, beta=1e-2):
    normal = NormalEquations(_cauchy_system())
    rng = np.random.default_rng(seed)
    worst = 0.0
    n = normal.grid.size
    for _ in range(trials):
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        a = y @ normal.matvec(x, beta)
        b = x @ normal.matvec(y, beta)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    return worst <= 1e-9, f"worst relative symmetry gap {worst:.2e}"


def check_compact_quadratic():
    worst = 0.0
    for N in (10, 28, 80):
        x = np.linspace(0.0, 1.0, N + 1)
        d2 = second_derivative(x ** 2, x[1] - x[0], build_compact(x.size))
        worst = max(worst, np.max(np.abs(d2 - 2.0)))
    return worst <= 1e-10, f"max |y'' - 2| for y = x^2: {worst:.2e}"


def check_mollifier_fft(seed=2):
    grid = make_grid2d(0.0, 2.0, 1.0, 0.125, 0.0625)
    U = np.random.default_rng(seed).standard_normal(grid.shape)
    worst = 0.0
    for beta in (1e-3, 1e-1, 1.0):
        fast = apply_C_beta_2d(Field2D(grid, U), MollifierSpec(beta)).vector
        dense = conv_matrix_2d(grid, beta) @ U.ravel()
        worst = max(worst, np.max(np.abs(fast - dense)) / np.max(np.abs(dense)))
    return worst <= 1e-12, f"FFT vs dense convolution gap {worst:.2e}"


def check_f_q(samples=1000, seed=3):
    rng = np.random.default_rng(seed)
    q = rng.uniform(0.1, 5.0, samples)
    bad = 0
    lam = rng.uniform(1e-3, 1.0, samples)
    t = rng.uniform(1e-6, 1.0 - 1e-6, samples)
    bad += int(np.sum(f_q(lam * t, q) > f_q(t, q) * (1 + 1e-12)))
    lam = rng.uniform(1.0 + 1e-6, 50.0, samples)
    t = rng.uniform(0.0, 1.0, samples) * lam ** -2.0
    t = np.clip(t, 1e-300, None)
    bad += int(np.sum(f_q(lam * t, q) > 2.0 ** q * f_q(t, q) * (1 + 1e-12)))
    return bad == 0, f"{bad} violations in {2 * samples} samples"


def check_morozov_orders(seed=4):
    rng = np.random.default_rng(seed)
    cfg = MorozovConfig()
    for _ in range(50):
        a, d = rng.uniform(0.1, 10.0), rng.uniform(1e-6, 1.0)
        lin = select_beta(lambda b: (None, a * b), d, cfg, "linear")
        bis = select_beta(lambda b: (None, a * b), d, cfg, "bisect")
        if lin.index != bis.index:
            return False, f"linear rung {lin.index} != bisect rung {bis.index}"
    return True, "bisect and linear searches agree on 50 monotone residuals"


CHECKS = (
    ("multiplier identity", check_multiplier_identity),
    ("operator norm", check_operator_norm),
    ("block operator adjoint", check_adjoint),
    ("normal operator symmetry", check_normal_symmetry),
    ("compact FD on x^2", check_compact_quadratic),
    ("mollifier FFT vs dense", check_mollifier_fft),
    ("f_q inequalities", check_f_q),
    ("Morozov search orders", check_morozov_orders),
)


def run_selftest(out=print):
    """Run every check; return ``True`` when all pass."""
    ok = True
    for name, fn in CHECKS:
        passed, detail = fn()
        ok &= bool(passed)
        out(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return ok
