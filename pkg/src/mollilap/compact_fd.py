"""Fourth-order compact finite differences and the marching block system.

Second derivatives on a uniform grid satisfy ``H1 Y'' = H2 Y / h^2`` where
interior rows read ``(Y''_{i-1} + 10 Y''_i + Y''_{i+1}) / 10 = 6/5 (Y_{i-1} - 2 Y_i + Y_{i+1}) / h^2``
and the two end rows use the one-sided closure
``Y''_0 + 10 Y''_1 = (145/12 Y_0 - 76/3 Y_1 + 29/2 Y_2 - 4/3 Y_3 + 1/12 Y_4) / h^2``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InputError, SolverError
from .grids import Field2D

_BOUNDARY_ROW = np.array([145.0 / 12.0, -76.0 / 3.0, 29.0 / 2.0, -4.0 / 3.0, 1.0 / 12.0])


@dataclass(frozen=True)
class CompactMatrices:
    """The matrices ``H1`` and ``H2`` of size ``N x N``."""

    N: int
    H1: np.ndarray
    H2: np.ndarray


def build_compact(N):
    """Assemble ``H1`` and ``H2`` for ``N`` nodes.

    ``H1`` has a unit diagonal, ``1/10`` beside it on interior rows, and the
    boundary couplings ``H1[0, 1] = H1[N-1, N-2] = 10`` (0-based). ``H2`` has
    ``-12/5`` on the interior diagonal, ``6/5`` beside it, and the five-point
    closure ``[145/12, -76/3, 29/2, -4/3, 1/12]`` in its first row, mirrored in
    the last.

    Examples
    --------
    >>> m = build_compact(6)
    >>> m.H1[0].tolist()
    [1.0, 10.0, 0.0, 0.0, 0.0, 0.0]
    """
    if int(N) != N or N < 5:
        raise InputError("compact scheme needs N >= 5 nodes")
    N = int(N)
    H1 = np.eye(N)
    i = np.arange(1, N - 1)
    H1[i, i - 1] = 0.1
    H1[i, i + 1] = 0.1
    H1[0, 1] = 10.0
    H1[N - 1, N - 2] = 10.0
    H2 = np.zeros((N, N))
    H2[i, i] = -12.0 / 5.0
    H2[i, i - 1] = 6.0 / 5.0
    H2[i, i + 1] = 6.0 / 5.0
    H2[0, :5] = _BOUNDARY_ROW
    H2[N - 1, N - 5:] = _BOUNDARY_ROW[::-1]
    return CompactMatrices(N, H1, H2)


def apply_H2(Y):
    """Product ``H2 Y`` evaluated in difference form.

    Every row of ``H2`` sums to zero, so each row can act on differences
    ``Y_k - Y_i`` instead of raw values. This avoids the cancellation of
    large equal-sized terms and matters because ``H1`` has a condition
    number near ``1e4``: rounding in ``H2 Y`` is amplified by the solve.
    """
    Y = np.asarray(Y, dtype=float)
    d = np.diff(Y)
    out = np.empty_like(Y)
    out[1:-1] = (6.0 / 5.0) * (d[1:] - d[:-1])
    out[0] = _BOUNDARY_ROW[1:] @ (Y[1:5] - Y[0])
    out[-1] = _BOUNDARY_ROW[1:] @ (Y[-2:-6:-1] - Y[-1])
    return out


def second_derivative(Y, h, mats):
    """Compact approximation ``Y'' = H1^{-1} H2 Y / h^2``.

    Examples
    --------
    >>> x = np.linspace(0.0, 1.0, 11)
    >>> bool(np.allclose(second_derivative(x**2, 0.1, build_compact(11)), 2.0, atol=1e-10))
    True
    """
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (mats.N,):
        raise InputError(f"expected a vector of length {mats.N}")
    if not h > 0:
        raise InputError("h must be positive")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(mats.H1)
    piv_abs = np.abs(np.diag(lu))
    if piv_abs.min() <= mats.N * np.finfo(float).eps * piv_abs.max():
        # happens for N = 5, where the two boundary rows make H1 rank deficient
        raise SolverError(f"H1 is singular for N = {mats.N}")
    return sla.lu_solve((lu, piv), apply_H2(Y)) / (h * h)


@dataclass(frozen=True)
class BlockSystem:
    """Block lower-triangular marching operator ``A`` and data ``B``.

    Attributes
    ----------
    grid : Grid2D
    r : float
        ``(h_y / h_x)^2``.
    D, D1 : ndarray
        ``D = H1 + r/12 H2`` and ``D1 = 5/6 r H2 - 2 H1``.
    B : ndarray
        Right-hand side, shape ``(n_y+1, n_x+1)``; block 0 is ``G``.
    """

    grid: object
    r: float
    D: np.ndarray
    D1: np.ndarray
    B: np.ndarray
    mats: CompactMatrices

    def with_data(self, G):
        """Same operator with the right-hand side built from new data ``G``."""
        return BlockSystem(self.grid, self.r, self.D, self.D1, _rhs(self.grid, G), self.mats)

    def dense(self):
        """Materialize ``A`` as a dense ``(N_tot, N_tot)`` array (tests and direct solves)."""
        ny1, nx1 = self.grid.shape
        A = np.zeros((ny1 * nx1, ny1 * nx1))

        def blk(j, k, M):
            A[j * nx1:(j + 1) * nx1, k * nx1:(k + 1) * nx1] = M

        blk(0, 0, np.eye(nx1))
        if ny1 > 1:
            blk(1, 0, 0.5 * self.D1)
            blk(1, 1, self.D)
        for j in range(2, ny1):
            blk(j, j - 2, self.D)
            blk(j, j - 1, self.D1)
            blk(j, j, self.D)
        return A


def _rhs(grid, G):
    values = G.values if hasattr(G, "values") else np.asarray(G, dtype=float)
    if values.shape != (grid.xgrid.count,):
        raise InputError("data length does not match the x-grid")
    if hasattr(G, "grid") and G.grid != grid.xgrid:
        raise InputError("data grid does not match the x-grid")
    B = np.zeros(grid.shape)
    B[0] = values
    return B


def assemble_system(grid, G):
    """Build ``D``, ``D1`` and ``B`` for the compact marching scheme on ``grid``.

    The system ``A U = B`` encodes ``U^0 = G``,
    ``D U^1 + 1/2 D1 U^0 = 0`` (even reflection across ``y = 0``) and
    ``D U^{j+1} + D1 U^j + D U^{j-1} = 0`` for ``j = 1 .. n_y - 1``.
    """
    mats = build_compact(grid.xgrid.count)
    r = (grid.hy / grid.hx) ** 2
    D = mats.H1 + (r / 12.0) * mats.H2
    D1 = (5.0 / 6.0) * r * mats.H2 - 2.0 * mats.H1
    return BlockSystem(grid, r, D, D1, _rhs(grid, G), mats)


def _as_blocks(sys, U):
    arr = U.values if isinstance(U, Field2D) else np.asarray(U, dtype=float)
    if arr.ndim == 1:
        if arr.size != sys.grid.size:
            raise InputError("vector length does not match the grid")
        arr = arr.reshape(sys.grid.shape)
    if arr.shape != sys.grid.shape:
        raise InputError(f"shape {arr.shape} does not match {sys.grid.shape}")
    return arr


def apply_A(sys, U):
    """Block product ``A U``; returns an array shaped like the grid."""
    U = _as_blocks(sys, U)
    out = np.empty_like(U)
    out[0] = U[0]
    out[1] = U[0] @ (0.5 * sys.D1).T + U[1] @ sys.D.T
    out[2:] = (U[:-2] + U[2:]) @ sys.D.T + U[1:-1] @ sys.D1.T
    return out


def apply_A_transpose(sys, V):
    """Block product ``A^T V``; returns an array shaped like the grid."""
    V = _as_blocks(sys, V)
    out = np.zeros_like(V)
    out[0] = V[0] + V[1] @ (0.5 * sys.D1)
    out[1] = V[1] @ sys.D
    out[:-2] += V[2:] @ sys.D
    out[1:-1] += V[2:] @ sys.D1
    out[2:] += V[2:] @ sys.D
    return out


def march(sys, G=None):
    """Solve ``A U = B`` block by block (unregularized marching).

    Parameters
    ----------
    sys : BlockSystem
    G : array_like, optional
        Start data; defaults to block 0 of ``sys.B``.

    Returns
    -------
    ndarray
        ``U`` shaped like the grid. Marching amplifies high x-frequencies
        exponentially in y, so this is only meaningful on short strips.
    """
    ny1, nx1 = sys.grid.shape
    U = np.zeros((ny1, nx1))
    U[0] = sys.B[0] if G is None else np.asarray(G, dtype=float)
    lu = sla.lu_factor(sys.D)
    U[1] = -sla.lu_solve(lu, 0.5 * sys.D1 @ U[0])
    for j in range(1, ny1 - 1):
        U[j + 1] = -sla.lu_solve(lu, sys.D1 @ U[j] + sys.D @ U[j - 1])
    return U
