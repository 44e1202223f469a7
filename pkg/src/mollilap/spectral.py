"""Mollified inversion of the Laplace transform by Fourier multipliers.

In logarithmic time ``u = ln t`` the unitary map ``(V f)(u) = exp(u/2) f(exp(u))``
turns ``L* L`` into convolution with ``k(x) = 1 / (2 cosh(x/2))``. Its unitary
Fourier transform is ``k_hat(xi) = sqrt(pi/2) / cosh(pi xi)``, so the
mollified problem

    minimize ||L f - g||^2 + ||(I - C_beta) f||^2

is solved by one division in frequency space:

    F V f_beta = F V L* g / (sqrt(2 pi) k_hat + (1 - sqrt(2 pi) phi_hat(beta xi))^2).

All transforms here act on a uniform u-grid with periodic FFTs; the window is
chosen wide enough that the data decay to negligible size at both ends.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError, SolverError
from .examples import gaussian_noise
from .grids import Grid1D, RealSignal
from .mollifier import multiplier_1d

SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class LogGridMap:
    """Uniform log-time grid ``u_k = -U_max + k du`` and its time nodes ``exp(u_k)``."""

    ugrid: Grid1D

    @property
    def u(self):
        return self.ugrid.nodes

    @property
    def t(self):
        return np.exp(self.ugrid.nodes)

    @property
    def du(self):
        return self.ugrid.step

    @property
    def xi(self):
        """Angular frequencies matching ``numpy.fft.fft`` ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.ugrid.count, self.du)


def make_log_map(u_max=40.0, count=2**14):
    """Periodic log grid on ``[-u_max, u_max)`` with ``count`` nodes."""
    if not u_max > 0:
        raise InputError("u_max must be positive")
    return LogGridMap(Grid1D(-float(u_max), 2.0 * u_max / count, count))


def _on_nodes(f, lmap):
    if callable(f):
        return np.asarray(f(lmap.t), dtype=float) * np.ones(lmap.ugrid.count)
    vals = np.asarray(f, dtype=float)
    if vals.shape != (lmap.ugrid.count,):
        raise InputError("samples must be given at every node of the log grid")
    return vals


def apply_V(f, lmap):
    """``(V f)(u_k) = exp(u_k / 2) f(exp(u_k))``.

    Parameters
    ----------
    f : callable or array_like
        Function of ``t`` or its samples at ``lmap.t``.
    lmap : LogGridMap
    """
    return RealSignal(lmap.ugrid, np.exp(lmap.u / 2.0) * _on_nodes(f, lmap))


def apply_V_star(w, lmap=None):
    """``(V* w)(t) = t^{-1/2} w(ln t)`` sampled at the time nodes ``exp(u_k)``."""
    if isinstance(w, RealSignal):
        u = w.grid.nodes
        vals = w.values
    else:
        if lmap is None:
            raise InputError("apply_V_star needs a RealSignal or a LogGridMap")
        u = lmap.u
        vals = np.asarray(w, dtype=float)
    return np.exp(-u / 2.0) * vals


def k_hat(xi):
    """``sqrt(pi/2) / cosh(pi xi)``, evaluated without overflow."""
    a = np.exp(-np.pi * np.abs(np.asarray(xi, dtype=float)))
    return SQRT_2PI * a / (1.0 + a * a)


def laplace_symbol(xi):
    """``sqrt(2 pi) k_hat(xi) = pi / cosh(pi xi)``, the spectrum of ``L* L``."""
    return SQRT_2PI * k_hat(xi)


@dataclass(frozen=True)
class SpectralMultiplier:
    """Frequencies, ``k_hat`` and penalty symbol on a log grid."""

    xi: np.ndarray
    khat: np.ndarray
    penalty: np.ndarray

    @property
    def denominator(self):
        return SQRT_2PI * self.khat + self.penalty

    @property
    def gain(self):
        """Filter ``sqrt(2 pi) k_hat / denominator``; at most 1 pointwise."""
        return SQRT_2PI * self.khat / self.denominator


def spectral_multiplier(lmap, beta):
    xi = lmap.xi
    return SpectralMultiplier(xi, k_hat(xi), multiplier_1d(beta, xi))


def _data_callable(g):
    if callable(g):
        return g
    if isinstance(g, RealSignal):
        warnings.warn(
            "sampled data are interpolated linearly and extended by zero outside "
            f"[{g.grid.start}, {g.grid.stop}]",
            stacklevel=3,
        )
        nodes, vals = g.grid.nodes, g.values

        def interp(s):
            return np.interp(s, nodes, vals, left=0.0, right=0.0)

        return interp
    raise InputError("data must be a callable or a RealSignal")


def apply_Lstar_g(g, t, *, hv=0.05, v_min=-60.0, decay=60.0, chunk=512):
    """``(L* g)(t) = int_0^inf exp(-t s) g(s) ds`` by trapezoid rule in ``v = ln s``.

    Parameters
    ----------
    g : callable or RealSignal
        Data on ``[0, inf)``.
    t : array_like
        Positive evaluation points.
    hv : float
        Step in ``v``.
    v_min : float
        Lower cutoff, ``s >= exp(v_min)``.
    decay : float
        Upper cutoff where ``t s = decay``.

    Examples
    --------
    >>> v = apply_Lstar_g(lambda s: np.exp(-s), [1.0, 3.0])
    >>> bool(np.allclose(v, [0.5, 0.25], atol=1e-12))
    True
    """
    gfun = _data_callable(g)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise InputError("L* g is evaluated at t > 0 only")
    s_lo = np.exp(v_min)
    head = abs(float(np.asarray(gfun(np.array([s_lo])))[0])) * s_lo
    probe = abs(float(np.asarray(gfun(np.array([1.0])))[0])) + 1.0
    if not np.isfinite(head) or head > 1e-12 * probe:
        raise InputError("data are not integrable at s = 0; shift them to a half-line where they are")
    out = np.empty_like(t)
    for i0 in range(0, t.size, chunk):
        tt = t[i0:i0 + chunk, None]
        v_max = np.log(decay / tt.min())
        n = int(np.ceil((v_max - v_min) / hv)) + 1
        v = v_min + hv * np.arange(n)
        s = np.exp(v)
        gs = np.asarray(gfun(s), dtype=float)
        if not np.all(np.isfinite(gs)):
            raise InputError("data are not finite on the quadrature nodes")
        out[i0:i0 + chunk] = hv * (np.exp(-tt * s[None, :]) @ (gs * s))
    return out


class LogLaplaceOperator:
    """``L`` in log coordinates: ``(V L V* w)(u) = int kappa(u + v) w(v) dv``.

    The kernel is ``kappa(x) = exp(x/2) exp(-exp(x))``. On the uniform grid the
    discretization ``H[k, m] = kappa(u_k + u_m) du`` is a symmetric Hankel
    matrix; products are evaluated with one FFT convolution.
    """

    def __init__(self, lmap):
        self.lmap = lmap
        n = lmap.ugrid.count
        self._n = n
        self._L = 4 * n
        j = np.arange(2 * n - 1)
        kern = self.kappa(2.0 * lmap.u[0] + j * lmap.du) * lmap.du
        self._khat = np.fft.rfft(kern, self._L)

    @staticmethod
    def kappa(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(x / 2.0 - np.exp(x))

    def matvec(self, w):
        n = self._n
        c = np.fft.irfft(np.fft.rfft(np.asarray(w, dtype=float)[::-1], self._L) * self._khat, self._L)
        return c[n - 1:2 * n - 1]

    def dense(self):
        u = self.lmap.u
        return self.kappa(u[:, None] + u[None, :]) * self.lmap.du


def operator_norm(count=2048, u_max=40.0, tol=1e-12, maxiter=5000, seed=0):
    """Largest singular value of the discretized ``L`` by power iteration.

    ``H`` is symmetric positive semidefinite, so the Rayleigh quotient of its
    power iterates increases to ``||H||``.

    Returns
    -------
    norm : float
    iterations : int
    """
    op = LogLaplaceOperator(make_log_map(u_max, count))
    x = np.random.default_rng(seed).standard_normal(count)
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, maxiter + 1):
        y = op.matvec(x)
        new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0, it
        x = y / ny
        if abs(new - lam) <= tol * abs(new):
            return new, it
        lam = new
    return lam, maxiter


@dataclass
class SpectralData:
    """Noisy data in log coordinates.

    Attributes
    ----------
    lmap : LogGridMap
    y : ndarray
        ``V g^delta`` at the grid nodes.
    w : ndarray
        ``V L* g^delta`` at the grid nodes.
    delta : float
        ``||g^delta - g||`` in ``L^2(0, inf)``.
    shift : float
        Data were taken on ``[shift, inf)`` and moved to start at 0.
    window_ok : bool
        Whether noise-free ``V L* g`` is below ``1e-6`` of its peak at both
        window ends (white noise is not expected to decay).
    """

    lmap: LogGridMap
    y: np.ndarray
    w: np.ndarray
    delta: float
    shift: float = 0.0
    window_ok: bool = True

    @property
    def norm(self):
        return float(np.sqrt(self.lmap.du) * np.linalg.norm(self.y))


def spectral_data(g, lmap, noise=None, *, c=0.0, lstar_kwargs=None):
    """Sample ``g(s + c)`` on the log grid and optionally add white noise.

    Shifting the data to ``[0, inf)`` makes them the Laplace transform of
    ``exp(-c t) f(t)``, which is what the solver then recovers.

    Parameters
    ----------
    g : callable or RealSignal
    lmap : LogGridMap
    noise : NoiseSpec, optional
        Level is a percentage of ``||V g||``.
    c : float
        Left end of the data half-line.
    """
    gfun = _data_callable(g)

    def shifted(s):
        return gfun(np.asarray(s, dtype=float) + c)

    y = np.exp(lmap.u / 2.0) * np.asarray(shifted(lmap.t), dtype=float)
    w = np.exp(lmap.u / 2.0) * apply_Lstar_g(shifted, lmap.t, **(lstar_kwargs or {}))
    window_ok = window_adequate(w)
    if not window_ok:
        warnings.warn("log window too small: V L*g is not negligible at the window ends", stacklevel=2)
    clean = SpectralData(lmap, y, w, 0.0, float(c), window_ok)
    if noise is None:
        return clean
    return add_spectral_noise(clean, noise)


def add_spectral_noise(clean, noise, op=None):
    """Perturb noise-free data with white noise on the ``V g`` samples.

    Parameters
    ----------
    clean : SpectralData
        Noise-free data.
    noise : NoiseSpec
        Level is a percentage of ``||V g||``.
    op : LogLaplaceOperator, optional
        Reused across calls to avoid rebuilding its kernel transform.
    """
    if clean.delta != 0:
        raise InputError("data already carry noise")
    if noise.level_percent == 0:
        return clean
    lmap = clean.lmap
    noisy, _ = gaussian_noise(clean.y, noise)
    pert = noisy - clean.y
    delta = float(np.sqrt(lmap.du) * np.linalg.norm(pert))
    w = clean.w + (op or LogLaplaceOperator(lmap)).matvec(pert)
    return SpectralData(lmap, noisy, w, delta, clean.shift, clean.window_ok)


@dataclass
class SpectralSolution:
    """Regularized solution on the log grid.

    Attributes
    ----------
    beta : float
    vf : ndarray
        ``V f_beta`` at the grid nodes.
    residual : float
        ``||L f_beta - g^delta||`` in ``L^2(0, inf)``.
    min_denominator : float
        Smallest value of the multiplier denominator on the grid.
    window_ok : bool
        Copied from the data (see :class:`SpectralData`).
    """

    lmap: LogGridMap
    beta: float
    vf: np.ndarray
    residual: float
    min_denominator: float
    window_ok: bool

    @property
    def f(self):
        """``f_beta`` at the time nodes ``exp(u_k)``."""
        return apply_V_star(self.vf, self.lmap)

    def at(self, t):
        """Linear interpolation of ``f_beta`` in ``t``."""
        t = np.asarray(t, dtype=float)
        tn = self.lmap.t
        if np.any(t < tn[0]) or np.any(t > tn[-1]):
            raise InputError("evaluation points outside the log window")
        return np.interp(t, tn, self.f)


def window_adequate(w, rel=1e-6):
    w = np.abs(np.asarray(w))
    peak = w.max()
    return bool(peak == 0 or max(w[0], w[-1]) <= rel * peak)


def solve_spectral(data, beta, lmap=None):
    """Mollified solution ``f_beta`` by Fourier division.

    Parameters
    ----------
    data : SpectralData or callable
        Prepared data, or a callable ``g`` on ``[0, inf)`` (noise free).
    beta : float
    lmap : LogGridMap, optional
        Needed only when ``data`` is a callable.

    Returns
    -------
    SpectralSolution
    """
    if not beta > 0:
        raise InputError("beta must be positive")
    if not isinstance(data, SpectralData):
        data = spectral_data(data, lmap or make_log_map())
    lm = data.lmap
    mult = spectral_multiplier(lm, beta)
    den = mult.denominator
    W = np.fft.fft(data.w)
    F = W / den
    vf = np.fft.ifft(F).real
    if not np.all(np.isfinite(vf)):
        raise SolverError("spectral division produced non-finite values")
    res = _residual(F, W, data, mult)
    return SpectralSolution(lm, float(beta), vf, res, float(den.min()), data.window_ok)


def _residual(F, W, data, mult):
    # ||Lf - g||^2 = <L*L f, f> - 2 <f, L*g> + ||g||^2, each term via Parseval
    n = data.lmap.ugrid.count
    du = data.lmap.du
    lf2 = np.sum(SQRT_2PI * mult.khat * np.abs(F) ** 2) * du / n
    cross = np.real(np.vdot(F, W)) * du / n
    g2 = du * float(data.y @ data.y)
    return float(np.sqrt(max(lf2 - 2.0 * cross + g2, 0.0)))


def f_q(lam, q):
    """``(-ln lam)^(-q)`` for ``0 < lam < 1``."""
    lam = np.asarray(lam, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any((lam <= 0) | (lam >= 1)):
        raise InputError("f_q is defined for 0 < lam < 1")
    if np.any(q <= 0):
        raise InputError("f_q needs q > 0")
    return (-np.log(lam)) ** (-q)
