"""Mollified solution of the discrete Cauchy problem and recovery of ``f``.

The regularized field minimizes ``||A U - B||^2 + ||(I - C_beta) U||^2``, so it
solves the normal equations

    [A^T A + (I - C_beta)^T (I - C_beta)] U = A^T B.

Two linear solvers are offered. ``"direct"`` forms the dense normal matrix
and factorizes it (Cholesky, falling back to pivoted LU if the matrix is
numerically indefinite). ``"cg"`` runs matrix-free conjugate gradients with
``A``, ``A^T`` applied blockwise and ``C_beta`` applied by FFT convolution.
The normal matrix becomes very ill-conditioned for small ``beta`` (around
``1e10`` at ``beta = 1e-3`` on the default grid), where CG stalls.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, cg

from .compact_fd import apply_A, apply_A_transpose
from .errors import InputError, SolverError
from .grids import Field2D, Grid1D
from .mollifier import MollifierSpec, apply_C_beta_array, conv_matrix_1d

METHODS = ("direct", "cg")


@dataclass(frozen=True)
class RegularizedSolveConfig:
    """Settings of one regularized solve.

    Attributes
    ----------
    beta : float
    method : {"direct", "cg"}
    cg_tol : float
        Relative residual target of CG on the normal equations.
    cg_maxit : int
    preconditioner : {None, "jacobi"}
    """

    beta: float
    method: str = "direct"
    cg_tol: float = 1e-10
    cg_maxit: int = 5000
    preconditioner: object = None

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise InputError("beta must be positive")
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}")
        if not 0 < self.cg_tol < 1:
            raise InputError("cg_tol must lie in (0, 1)")
        if int(self.cg_maxit) != self.cg_maxit or self.cg_maxit < 1:
            raise InputError("cg_maxit must be a positive integer")
        if self.preconditioner not in (None, "jacobi"):
            raise InputError("preconditioner must be None or 'jacobi'")


@dataclass
class SolveInfo:
    """Diagnostics of one regularized solve."""

    beta: float
    method: str
    iterations: int = 0
    converged: bool = True
    relres: float = 0.0
    factorization: str = ""
    wall_time: float = 0.0
    history: list = field(default_factory=list)
    """``(iteration, relative residual, energy)`` every 50 CG iterations, where
    energy is ``x.M x / 2 - b.x``."""


class NormalEquations:
    """Reusable pieces of the normal equations for one block system.

    ``A^T A`` is formed once (densely) on first use by the direct solver;
    each ``beta`` then adds the dense penalty and factorizes.

    Parameters
    ----------
    sys : BlockSystem
    pad_factor : int
        Zero-padding factor of the FFT convolution in matrix-free products.
    """

    def __init__(self, sys, pad_factor=2):
        self.sys = sys
        self.pad_factor = pad_factor
        self._AtA = None

    @property
    def grid(self):
        return self.sys.grid

    @property
    def AtA(self):
        """Dense ``A^T A``, assembled from its block-pentadiagonal structure."""
        if self._AtA is None:
            self._AtA = _gram_blocks(self.sys)
        return self._AtA

    def rhs(self, Bdelta):
        """``A^T B^delta`` as a flat vector."""
        return apply_A_transpose(self.sys, Bdelta).ravel()

    def matrix(self, beta):
        """Dense normal matrix for ``beta``."""
        g = self.grid
        Cy = conv_matrix_1d(g.ygrid.count, g.hy, beta)
        Cx = conv_matrix_1d(g.xgrid.count, g.hx, beta)
        M = self.AtA.copy()
        # (I - C)^T (I - C) = I - 2 C + C^2 with C = kron(Cy, Cx) symmetric
        M -= 2.0 * np.kron(Cy, Cx)
        M += np.kron(Cy @ Cy, Cx @ Cx)
        M[np.diag_indices_from(M)] += 1.0
        return M

    def factor(self, beta):
        """Factorize the normal matrix; returns a :class:`NormalFactor`."""
        M = self.matrix(beta)
        try:
            return NormalFactor(beta, "cholesky", sla.cho_factor(M, overwrite_a=True))
        except np.linalg.LinAlgError:
            M = self.matrix(beta)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                return NormalFactor(beta, "lu", sla.lu_factor(M, overwrite_a=True))

    def penalty_apply(self, U, beta):
        spec = MollifierSpec(beta, 2, self.pad_factor)
        V = U - apply_C_beta_array(U, self.grid, spec)
        return V - apply_C_beta_array(V, self.grid, spec)

    def matvec(self, x, beta):
        U = np.asarray(x, dtype=float).reshape(self.grid.shape)
        out = apply_A_transpose(self.sys, apply_A(self.sys, U)) + self.penalty_apply(U, beta)
        return out.ravel()

    def diagonal(self, beta):
        """Diagonal of the normal matrix, computed blockwise."""
        D, D1 = self.sys.D, self.sys.D1
        ny1, nx1 = self.grid.shape
        cn = lambda M: np.sum(M * M, axis=0)  # noqa: E731
        d = np.zeros((ny1, nx1))
        d[0] = 1.0 + cn(0.5 * D1) + (cn(D) if ny1 > 2 else 0.0)
        for j in range(1, ny1):
            d[j] = cn(D)
            if j + 1 < ny1:
                d[j] += cn(D1)
            if j + 2 < ny1:
                d[j] += cn(D)
        g = self.grid
        Cy = conv_matrix_1d(g.ygrid.count, g.hy, beta)
        Cx = conv_matrix_1d(g.xgrid.count, g.hx, beta)
        c = np.outer(np.diag(Cy), np.diag(Cx))
        c2 = np.outer(np.sum(Cy * Cy, axis=0), np.sum(Cx * Cx, axis=0))
        return (d + 1.0 - 2.0 * c + c2).ravel()


def _gram_blocks(sys):
    ny1, nx1 = sys.grid.shape
    rows = [[(0, np.eye(nx1))]]
    if ny1 > 1:
        rows.append([(0, 0.5 * sys.D1), (1, sys.D)])
    rows += [[(j - 2, sys.D), (j - 1, sys.D1), (j, sys.D)] for j in range(2, ny1)]
    G = np.zeros((ny1 * nx1, ny1 * nx1))
    for blocks in rows:
        for c1, M1 in blocks:
            for c2, M2 in blocks:
                G[c1 * nx1:(c1 + 1) * nx1, c2 * nx1:(c2 + 1) * nx1] += M1.T @ M2
    return G


@dataclass
class NormalFactor:
    """A factorization of the normal matrix for one ``beta``."""

    beta: float
    kind: str
    data: tuple

    def solve(self, rhs):
        if self.kind == "cholesky":
            return sla.cho_solve(self.data, rhs)
        return sla.lu_solve(self.data, rhs)


def _as_rhs_blocks(sys, Bdelta):
    B = np.asarray(Bdelta, dtype=float)
    if B.size != sys.grid.size:
        raise InputError("right-hand side does not match the grid")
    return B.reshape(sys.grid.shape)


def solve_u_beta(sys, Bdelta, cfg, moll=None, *, normal=None, x0=None):
    """Regularized field ``U_beta`` for data ``B^delta``.

    Parameters
    ----------
    sys : BlockSystem
    Bdelta : array_like
        Right-hand side shaped like the grid (block 0 holds the noisy data).
    cfg : RegularizedSolveConfig
    moll : MollifierSpec, optional
        Supplies ``pad_factor``; its ``beta`` must equal ``cfg.beta``.
    normal : NormalEquations, optional
        Reuse cached ``A^T A`` across calls.
    x0 : array_like, optional
        CG starting guess.

    Returns
    -------
    U : Field2D
    info : SolveInfo

    Raises
    ------
    SolverError
        If CG does not converge; ``payload`` holds ``(U_last, info)``.
    """
    if moll is not None:
        if moll.dim != 2:
            raise InputError("the Cauchy solver needs a 2-D mollifier")
        if moll.beta != cfg.beta:
            raise InputError("mollifier beta and solve beta differ")
    pad = moll.pad_factor if moll is not None else 2
    normal = normal or NormalEquations(sys, pad)
    B = _as_rhs_blocks(sys, Bdelta)
    rhs = normal.rhs(B)
    t0 = time.perf_counter()
    info = SolveInfo(cfg.beta, cfg.method)
    if not np.any(rhs):
        info.wall_time = time.perf_counter() - t0
        return Field2D(sys.grid, np.zeros(sys.grid.shape)), info

    if cfg.method == "direct":
        fac = normal.factor(cfg.beta)
        x = fac.solve(rhs)
        info.factorization = fac.kind
        info.iterations = 1
        info.relres = float(np.linalg.norm(normal.matvec(x, cfg.beta) - rhs) / np.linalg.norm(rhs))
        info.wall_time = time.perf_counter() - t0
        return Field2D(sys.grid, x.reshape(sys.grid.shape)), info

    n = sys.grid.size
    op = LinearOperator((n, n), matvec=lambda v: normal.matvec(v, cfg.beta), dtype=float)
    prec = None
    if cfg.preconditioner == "jacobi":
        inv = 1.0 / normal.diagonal(cfg.beta)
        prec = LinearOperator((n, n), matvec=lambda v: inv * v, dtype=float)
    count = [0]

    def callback(xk):
        count[0] += 1
        if count[0] % 50 == 0:
            Mx = op.matvec(xk)
            relres = float(np.linalg.norm(Mx - rhs) / np.linalg.norm(rhs))
            # CG decreases this quadratic functional at every step
            energy = float(0.5 * (xk @ Mx) - rhs @ xk)
            info.history.append((count[0], relres, energy))

    x, flag = cg(op, rhs, x0=None if x0 is None else np.ravel(x0), rtol=cfg.cg_tol,
                 atol=0.0, maxiter=int(cfg.cg_maxit), M=prec, callback=callback)
    info.iterations = count[0]
    info.relres = float(np.linalg.norm(op.matvec(x) - rhs) / np.linalg.norm(rhs))
    info.converged = flag == 0
    info.wall_time = time.perf_counter() - t0
    U = Field2D(sys.grid, x.reshape(sys.grid.shape))
    if not info.converged:
        raise SolverError(
            f"CG did not reach rtol {cfg.cg_tol} in {cfg.cg_maxit} iterations "
            f"(relative residual {info.relres:.3e})",
            payload=(U, info),
        )
    return U, info


def residual(sys, U, Bdelta):
    """Discrepancy ``||A U - B^delta||_2``."""
    AU = apply_A(sys, U)
    return float(np.linalg.norm(AU - _as_rhs_blocks(sys, Bdelta)))


@dataclass(frozen=True)
class Reconstruction:
    """Samples of ``exp(-c t) f(t)`` recovered from one row of ``u``.

    Attributes
    ----------
    tgrid : Grid1D
    values : ndarray
    x_row : float
        Abscissa of the row that was transformed.
    n_fft : int
    e_trunc : float
        Heuristic size of the neglected tail ``int_{L_y}^inf``: assuming
        ``u ~ u(x_row, L_y) (L_y / y)^2`` beyond the window, the tail of the
        scaled cosine integral is at most ``(2/pi) |u(x_row, L_y)| L_y``.
    """

    tgrid: Grid1D
    values: np.ndarray
    x_row: float
    n_fft: int
    e_trunc: float = 0.0


def reconstruction_grid(ygrid, t_count=None, *, pad=8, t_max=10.0, include_zero=False):
    """Time nodes ``t_k = 2 pi k / (n_fft h_y)`` induced by the cosine transform."""
    n_fft = pad * ygrid.count
    dt = 2.0 * np.pi / (n_fft * ygrid.step)
    if t_count is None:
        t_count = int(np.floor(t_max / dt + 1e-9)) + (1 if include_zero else 0)
    if int(t_count) != t_count or t_count < 2:
        raise InputError("t_count must be an integer >= 2")
    k0 = 0 if include_zero else 1
    if k0 + t_count - 1 > n_fft // 2:
        raise InputError(f"t_count {t_count} exceeds the {n_fft // 2} resolvable frequencies")
    return Grid1D(k0 * dt, dt, int(t_count)), n_fft


def reconstruct_f(U, c, t_count=None, *, pad=8, t_max=10.0, include_zero=False, row=0):
    """Cosine inversion ``(2/pi) int_0^{L_y} cos(y t) u(x_row, y) dy`` on the FFT grid.

    Reads the row ``x_row = grid.xgrid.start + row * h_x`` of ``U``. That integral
    equals ``exp(-x_row t) f(t)`` up to y-truncation, so the result is multiplied
    by ``exp((x_row - c) t)`` to return ``exp(-c t) f(t)``.

    Parameters
    ----------
    U : Field2D
    c : float
    t_count : int, optional
        Number of time nodes; by default all nodes in ``(0, t_max]``.
    pad : int
        Zero-padded FFT length is ``pad * (n_y + 1)``; at least 8 is advised.
    include_zero : bool
        Start the time grid at ``t = 0`` instead of ``t = dt``.
    """
    grid = U.grid
    x_row = grid.xgrid.start + row * grid.hx
    tgrid, n_fft = reconstruction_grid(grid.ygrid, t_count, pad=pad, t_max=t_max,
                                       include_zero=include_zero)
    w = U.values[:, row].astype(float)
    w[0] *= 0.5
    w[-1] *= 0.5
    spec = np.fft.rfft(w, n_fft).real * grid.hy
    k0 = int(round(tgrid.start / tgrid.step))
    t = tgrid.nodes
    vals = (2.0 / np.pi) * spec[k0:k0 + tgrid.count] * np.exp((x_row - c) * t)
    e_trunc = (2.0 / np.pi) * abs(float(U.values[-1, row])) * grid.ygrid.stop
    return Reconstruction(tgrid, vals, float(x_row), n_fft, e_trunc)
