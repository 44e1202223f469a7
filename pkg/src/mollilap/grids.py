"""Uniform grids, signal containers, norms and linear resampling."""

from dataclasses import dataclass

import numpy as np

from .errors import InputError

#: Tolerance for "divides the interval exactly" checks.
DIVISIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    """Uniform one-dimensional grid with nodes ``start + i * step``.

    Parameters
    ----------
    start : float
        First node.
    step : float
        Spacing, strictly positive.
    count : int
        Number of nodes, at least 2.
    """

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not np.isfinite(self.start):
            raise InputError("grid start must be finite")
        if not (np.isfinite(self.step) and self.step > 0):
            raise InputError(f"grid step must be positive, got {self.step!r}")
        if int(self.count) != self.count or self.count < 2:
            raise InputError(f"grid count must be an integer >= 2, got {self.count!r}")
        object.__setattr__(self, "count", int(self.count))

    @property
    def nodes(self):
        """Node coordinates as a new float array."""
        return self.start + self.step * np.arange(self.count)

    @property
    def stop(self):
        """Last node."""
        return self.start + self.step * (self.count - 1)

    @property
    def n(self):
        """Number of intervals (``count - 1``)."""
        return self.count - 1


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid on ``[c, L_x] x [0, L_y]``."""

    xgrid: Grid1D
    ygrid: Grid1D

    def __post_init__(self):
        if self.ygrid.start != 0:
            raise InputError("ygrid must start at 0")

    @property
    def shape(self):
        """Array shape ``(n_y + 1, n_x + 1)`` of a y-blocked field."""
        return (self.ygrid.count, self.xgrid.count)

    @property
    def size(self):
        return self.xgrid.count * self.ygrid.count

    @property
    def hx(self):
        return self.xgrid.step

    @property
    def hy(self):
        return self.ygrid.step


@dataclass(frozen=True)
class RealSignal:
    """Samples of a real function on a :class:`Grid1D`."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size != self.grid.count:
            raise InputError(
                f"signal length {v.size} does not match grid count {self.grid.count}"
            )
        if not np.all(np.isfinite(v)):
            raise InputError("signal values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Field2D:
    """Values ``u[j, i] ~ u(x_i, y_j)`` on a :class:`Grid2D`.

    Row ``j`` of :attr:`values` is the block ``U^j``; :attr:`vector` is the
    concatenation ``(U^0, ..., U^{n_y})``.
    """

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            if v.size != self.grid.size:
                raise InputError(
                    f"field vector length {v.size} does not match grid size {self.grid.size}"
                )
            v = v.reshape(self.grid.shape)
        if v.shape != self.grid.shape:
            raise InputError(f"field shape {v.shape} does not match {self.grid.shape}")
        object.__setattr__(self, "values", v)

    @property
    def vector(self):
        """Flat y-blocked vector (a view when possible)."""
        return self.values.reshape(-1)

    def block(self, j):
        """Return block ``U^j`` (the row at ``y_j``)."""
        return self.values[j]

    @classmethod
    def from_blocks(cls, grid, blocks):
        """Stack a sequence of x-blocks into a field."""
        return cls(grid, np.vstack([np.asarray(b, dtype=float) for b in blocks]))


def _checked_count(length, h, name):
    ratio = length / h
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > DIVISIBILITY_TOL * max(1.0, abs(ratio)):
        raise InputError(f"{name}: interval length {length} is not a multiple of step {h}")
    return n


def make_grid2d(c, L_x, L_y, h_x, h_y):
    """Build the rectangle grid on ``[c, L_x] x [0, L_y]``.

    Parameters
    ----------
    c : float
        Left edge (the abscissa of the data line).
    L_x, L_y : float
        Right and top edges.
    h_x, h_y : float
        Steps; they must divide the side lengths to within ``1e-9``.

    Returns
    -------
    Grid2D

    Examples
    --------
    >>> g = make_grid2d(0.0, 7.0, 4.0, 0.25, 0.025)
    >>> g.xgrid.n, g.ygrid.n
    (28, 160)
    """
    if not (h_x > 0 and h_y > 0):
        raise InputError("steps must be positive")
    if not L_x > c:
        raise InputError("need L_x > c")
    if not L_y > 0:
        raise InputError("need L_y > 0")
    n_x = _checked_count(L_x - c, h_x, "x")
    n_y = _checked_count(L_y, h_y, "y")
    return Grid2D(Grid1D(float(c), float(h_x), n_x + 1), Grid1D(0.0, float(h_y), n_y + 1))


def l2_norm(v):
    """Euclidean norm of a real vector (any shape is flattened)."""
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise InputError("l2_norm needs finite entries")
    # scaling by the largest entry avoids underflow and overflow of the squares
    m = float(np.max(np.abs(v))) if v.size else 0.0
    if m == 0.0:
        return 0.0
    return m * float(np.linalg.norm(v / m))


def resample_linear(s, target):
    """Piecewise-linear interpolation of ``s`` at the nodes of ``target``.

    Raises
    ------
    InputError
        If any target node lies outside the source range.
    """
    src = s.grid
    tn = target.nodes
    slack = 1e-12 * max(1.0, abs(src.stop), abs(src.start))
    if tn[0] < src.start - slack or tn[-1] > src.stop + slack:
        raise InputError(
            f"target range [{tn[0]}, {tn[-1]}] exceeds source range [{src.start}, {src.stop}]"
        )
    return RealSignal(target, np.interp(tn, src.nodes, s.values))
