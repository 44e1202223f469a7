"""Closed-form test problems, the forward Laplace transform, and noise.

The three examples pair a time signal ``f`` with its Laplace transform
``g = Lf``. Forward values computed here by quadrature serve as an
independent check on those closed forms; the harmonic field ``u(x, y)``,
the real part of ``Lf(x + iy)``, is the reference for the Cauchy route.
"""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import InputError
from .grids import Field2D, Grid1D, RealSignal, l2_norm

A = 0.5
B = np.sqrt(3.0) / 2.0
_EM2 = np.exp(-2.0)


def _f1(t):
    t = np.asarray(t, dtype=float)
    return np.sin(B * t) * np.exp(-A * t) / B


def _g1(s):
    s = np.asarray(s, dtype=float)
    return 1.0 / ((A + s) ** 2 + B**2)


def _u1(x, y):
    """Real part of ``g1`` at ``x + iy``; exact reference for Example 1."""
    z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    return np.real(1.0 / ((A + z) ** 2 + B**2))


def _f2(t):
    t = np.asarray(t, dtype=float)
    return np.exp(-np.abs(t - 2.0))


def _g2(s):
    s = np.asarray(s, dtype=float)
    d = s - 1.0
    at_one = d == 0.0
    safe = np.where(at_one, 1.0, d)
    # (e^{-2} - e^{-2s}) / (s - 1) written without cancellation near s = 1
    second = np.where(at_one, 2.0 * _EM2, -_EM2 * np.expm1(-2.0 * d) / safe)
    return np.exp(-2.0 * s) / (s + 1.0) + second


def _f3(t):
    t = np.asarray(t, dtype=float)
    return np.where(t < 1.0, 0.0, np.where(t > 1.0, 1.0, 0.5))


def _g3(s):
    s = np.asarray(s, dtype=float)
    return np.exp(-s) / s


@dataclass(frozen=True)
class ExampleSpec:
    """A test problem: ``g`` is the Laplace transform of ``f`` on ``[c, inf)``.

    Attributes
    ----------
    id : int
        1, 2 or 3.
    c : float
        Left edge of the data half-line.
    f, g : callable
        Vectorized closed forms.
    description : str
    breakpoints : tuple of float
        Points where ``f`` is not smooth (used to split quadrature panels).
    envelope : tuple of float
        ``(C, alpha)`` with ``|f(t)| <= C exp(-alpha t)``.
    """

    id: int
    c: float
    f: Callable
    g: Callable
    description: str
    breakpoints: Tuple[float, ...] = ()
    envelope: Tuple[float, float] = (1.0, 0.0)

    def f_tilde(self, t):
        """Damped target ``exp(-c t) f(t)``, the quantity recovered from data on ``[c, inf)``."""
        t = np.asarray(t, dtype=float)
        return np.exp(-self.c * t) * self.f(t)


_CORPUS = {
    1: ExampleSpec(
        1, 0.0, _f1, _g1,
        "f(t) = sin(b t) exp(-a t) / b, a = 1/2, b = sqrt(3)/2; g(s) = 1/((a+s)^2 + b^2)",
        (), (1.0 / B, A),
    ),
    2: ExampleSpec(
        2, 0.0, _f2, _g2,
        "f(t) = exp(-|t-2|); g(s) = exp(-2s)/(s+1) + (exp(-2) - exp(-2s))/(s-1), g(1) = 5/2 exp(-2)",
        (2.0,), (np.exp(2.0), 1.0),
    ),
    3: ExampleSpec(
        3, 0.5, _f3, _g3,
        "f = unit step at t = 1 (value 1/2 at the jump); g(s) = exp(-s)/s on s >= 1/2",
        (1.0,), (1.0, 0.0),
    ),
}


def example(id):
    """Return the example with the given id (1, 2 or 3)."""
    try:
        return _CORPUS[int(id)]
    except (KeyError, ValueError, TypeError):
        raise InputError(f"unknown example id {id!r}; expected 1, 2 or 3") from None


def exact_u_example1(x, y):
    """Closed-form ``Re g1(x + iy)`` for Example 1 (used as an oracle)."""
    return _u1(x, y)


@dataclass(frozen=True)
class QuadConfig:
    """Composite Gauss-Legendre settings for the forward transform.

    Attributes
    ----------
    tol : float
        Stop doubling panels once successive estimates differ by less.
    tail_eps : float
        Truncation point ``T`` is chosen so the envelope times
        ``exp(-x T)`` is below this.
    order : int
        Nodes per panel.
    panels : int
        Initial panel count per smooth piece.
    max_doublings : int
    """

    tol: float = 1e-10
    tail_eps: float = 1e-12
    order: int = 20
    panels: int = 8
    max_doublings: int = 10


@dataclass
class QuadResult:
    """Value, doubling-difference estimate and tail bound of a quadrature."""

    value: np.ndarray
    error_estimate: float
    tail_bound: float
    truncation: float
    panels: int


def _truncation(envelope, x_min, eps):
    C, alpha = envelope
    rate = x_min + alpha
    if not rate > 0:
        raise InputError(
            f"Laplace integral does not converge at x = {x_min} for this f (decay rate {rate})"
        )
    return max(np.log(max(C, 1.0) / eps) / rate, 1.0)


def _nodes_weights(T, breakpoints, panels, order):
    xg, wg = np.polynomial.legendre.leggauss(order)
    cuts = [0.0] + sorted(b for b in breakpoints if 0.0 < b < T) + [T]
    ts, ws = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        # panels proportional to piece length, at least `panels`
        m = max(panels, int(np.ceil(panels * (hi - lo) / 4.0)))
        edges = np.linspace(lo, hi, m + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        ts.append((mid[:, None] + half[:, None] * xg[None, :]).ravel())
        ws.append((half[:, None] * wg[None, :]).ravel())
    return np.concatenate(ts), np.concatenate(ws)


def _composite(integrand, T, breakpoints, quad):
    panels = quad.panels
    t, w = _nodes_weights(T, breakpoints, panels, quad.order)
    prev = integrand(t, w)
    for _ in range(quad.max_doublings):
        panels *= 2
        t, w = _nodes_weights(T, breakpoints, panels, quad.order)
        cur = integrand(t, w)
        err = float(np.max(np.abs(cur - prev)))
        if err < quad.tol:
            return cur, err, panels
        prev = cur
    raise InputError(f"quadrature did not reach tol {quad.tol} (last difference {err:.3e})")


def laplace_quadrature(f, x, quad=None, *, breakpoints=(), envelope=(1.0, 0.0), y=None):
    """Composite quadrature of ``int_0^T exp(-x t) cos(y t) f(t) dt``.

    Parameters
    ----------
    f : callable
        Vectorized function of ``t``.
    x : float or array_like
        Abscissae (must make the integral converge).
    quad : QuadConfig, optional
    breakpoints : sequence of float
        Where ``f`` has kinks or jumps.
    envelope : (float, float)
        ``(C, alpha)`` bound ``|f(t)| <= C exp(-alpha t)``.
    y : array_like, optional
        Ordinates; when given the result has shape ``(len(y), len(x))``.

    Returns
    -------
    QuadResult
    """
    quad = quad or QuadConfig()
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    T = _truncation(envelope, float(xs.min()), quad.tail_eps)
    C, alpha = envelope
    tail = C * np.exp(-(xs.min() + alpha) * T) / (xs.min() + alpha)

    if y is None:
        def integrand(t, w):
            return np.exp(-np.outer(xs, t)) @ (w * f(t))
    else:
        ys = np.atleast_1d(np.asarray(y, dtype=float))

        def integrand(t, w):
            return (np.cos(np.outer(ys, t)) * (w * f(t))) @ np.exp(-np.outer(t, xs))

    value, err, panels = _composite(integrand, T, breakpoints, quad)
    return QuadResult(value, err, float(tail), float(T), panels)


def forward_laplace(f, x, quad=None, *, breakpoints=(), envelope=(1.0, 0.0)):
    """Laplace transform ``(Lf)(x)`` by truncated composite quadrature.

    Scalar ``x`` gives a float; array ``x`` gives an array.

    Examples
    --------
    >>> ex = example(1)
    >>> round(forward_laplace(ex.f, 0.0, breakpoints=ex.breakpoints, envelope=ex.envelope), 8)
    1.0
    """
    res = laplace_quadrature(f, x, quad, breakpoints=breakpoints, envelope=envelope)
    return float(res.value[0]) if np.ndim(x) == 0 else res.value


def sample_G(ex, xgrid):
    """Closed-form data ``G_i = g(x_i)`` on the x-grid."""
    if not isinstance(xgrid, Grid1D):
        raise InputError("sample_G needs a Grid1D with at least 2 nodes")
    if xgrid.start < ex.c - 1e-12:
        raise InputError(f"x-grid starts at {xgrid.start} below c = {ex.c}")
    return RealSignal(xgrid, ex.g(xgrid.nodes))


@dataclass(frozen=True)
class NoiseSpec:
    """Relative Gaussian noise level (percent of the data norm) and seed."""

    level_percent: float
    seed: int = 0

    def __post_init__(self):
        if not self.level_percent >= 0:
            raise InputError("noise level must be >= 0")


def gaussian_noise(values, noise):
    """Return ``(noisy, delta)`` with ``||noisy - values|| = level/100 * ||values||``.

    The draw uses ``numpy.random.default_rng(seed)`` (PCG64).
    """
    v = np.asarray(values, dtype=float)
    if noise.level_percent == 0:
        return v.copy(), 0.0
    theta = np.random.default_rng(noise.seed).standard_normal(v.shape)
    eta = noise.level_percent / 100.0 * l2_norm(v) / l2_norm(theta)
    perturbation = eta * theta
    return v + perturbation, l2_norm(perturbation)


def add_noise(G, noise):
    """Noisy copy of a data signal and its exact noise norm ``delta``."""
    vals, delta = gaussian_noise(G.values, noise)
    return RealSignal(G.grid, vals), delta


def u_exact(ex, grid, quad=None):
    """Harmonic field ``u(x, y) = int exp(-x t) cos(y t) f(t) dt`` on the grid."""
    if grid.xgrid.start < ex.c - 1e-12:
        raise InputError(f"x-grid starts at {grid.xgrid.start} below c = {ex.c}")
    res = laplace_quadrature(
        ex.f, grid.xgrid.nodes, quad,
        breakpoints=ex.breakpoints, envelope=ex.envelope, y=grid.ygrid.nodes,
    )
    return Field2D(grid, res.value)
