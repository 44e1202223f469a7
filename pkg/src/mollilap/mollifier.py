"""Cauchy mollifier: kernel, Fourier factor, penalty multiplier and ``C_beta``.

The kernel is ``phi(x) = 1 / (pi (1 + x^2))`` with unitary Fourier transform
``exp(-|xi|) / sqrt(2 pi)``, scaled as ``phi_beta(x) = phi(x / beta) / beta``.
Its two-dimensional version is the product kernel. The discrete operator
``C_beta`` samples ``phi_beta`` on the grid offsets, renormalizes the samples
to unit sum, and convolves with zero extension outside the grid.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .grids import Field2D, RealSignal

#: Order of the Cauchy mollifier: ``1 - sqrt(2 pi) phi_hat(xi) ~ |xi|``.
CAUCHY_ORDER = 1.0


@dataclass(frozen=True)
class MollifierSpec:
    """Width, dimension and zero-padding factor of a Cauchy mollifier."""

    beta: float
    dim: int = 2
    pad_factor: int = 2
    kernel: str = "cauchy"

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise InputError(f"beta must be positive, got {self.beta!r}")
        if self.dim not in (1, 2):
            raise InputError("dim must be 1 or 2")
        if int(self.pad_factor) != self.pad_factor or self.pad_factor < 2:
            raise InputError("pad_factor must be an integer >= 2")
        if self.kernel != "cauchy":
            raise InputError(f"unsupported kernel {self.kernel!r}")


@dataclass(frozen=True)
class MollifierDiagnostics:
    """Lower/upper penalty bounds on the unit sphere and their ratios to ``beta^(2s)``."""

    beta: float
    m_beta: float
    M_beta: float
    ratio_m: float
    ratio_M: float
    s: float


def phi(x):
    """Cauchy density ``1 / (pi (1 + x^2))``."""
    x = np.asarray(x, dtype=float)
    return 1.0 / (np.pi * (1.0 + x * x))


def phi_hat_1d(xi):
    """Unitary Fourier transform of :func:`phi`, ``exp(-|xi|) / sqrt(2 pi)``."""
    xi = np.asarray(xi, dtype=float)
    return np.exp(-np.abs(xi)) / np.sqrt(2.0 * np.pi)


def multiplier_1d(beta, xi):
    """Penalty symbol ``(1 - sqrt(2 pi) phi_hat(beta xi))^2 = (1 - exp(-beta |xi|))^2``."""
    if not beta > 0:
        raise InputError("beta must be positive")
    return np.expm1(-beta * np.abs(np.asarray(xi, dtype=float))) ** 2


def moll_diagnostics(beta):
    """``m_beta`` and ``M_beta`` for the even Cauchy kernel.

    The penalty symbol only depends on ``|xi|``, so its minimum and maximum
    over ``|xi| = 1`` coincide: both equal ``(1 - exp(-beta))^2``.
    """
    if not beta > 0:
        raise InputError("beta must be positive")
    sphere = np.array([-1.0, 1.0])
    vals = multiplier_1d(beta, sphere)
    m, M = float(vals.min()), float(vals.max())
    scale = beta ** (2.0 * CAUCHY_ORDER)
    return MollifierDiagnostics(beta, m, M, m / scale, M / scale, CAUCHY_ORDER)


def kernel_weights(n, h, beta):
    """Renormalized samples of ``phi_beta`` at offsets ``k h``, ``|k| <= n - 1``.

    Returns an array of length ``2 n - 1`` whose center entry is offset 0.
    """
    k = np.arange(-(n - 1), n) * h
    w = beta / (np.pi * (beta * beta + k * k))
    return w / w.sum()


def conv_matrix_1d(n, h, beta):
    """Dense symmetric Toeplitz matrix of the discrete 1-D ``C_beta``."""
    w = kernel_weights(n, h, beta)
    i = np.arange(n)
    return w[(i[:, None] - i[None, :]) + (n - 1)]


def _fft_len(n, pad_factor):
    return max(pad_factor * n, 2 * n - 1)


def _convolve_axis(values, h, beta, pad_factor, axis):
    n = values.shape[axis]
    w = kernel_weights(n, h, beta)
    L = _fft_len(n, pad_factor)
    spec = np.fft.rfft(values, L, axis=axis)
    shape = [1] * values.ndim
    shape[axis] = -1
    spec *= np.fft.rfft(w, L).reshape(shape)
    full = np.fft.irfft(spec, L, axis=axis)
    return np.take(full, np.arange(n - 1, 2 * n - 1), axis=axis)


def apply_C_beta_1d(sig, spec):
    """Discrete mollification of a 1-D signal (zero-padded FFT convolution)."""
    if spec.dim != 1:
        raise InputError("apply_C_beta_1d needs a dim=1 spec")
    out = _convolve_axis(sig.values, sig.grid.step, spec.beta, spec.pad_factor, 0)
    return RealSignal(sig.grid, out)


def apply_C_beta_2d(field, spec):
    """Separable 2-D mollification of a field with the product Cauchy kernel."""
    if spec.dim != 2:
        raise InputError("apply_C_beta_2d needs a dim=2 spec")
    return Field2D(field.grid, apply_C_beta_array(field.values, field.grid, spec))


def apply_C_beta_array(values, grid, spec):
    """Apply the 2-D ``C_beta`` to an ``(n_y+1, n_x+1)`` array on ``grid``.

    The two axes are transformed jointly with a zero-padded real 2-D FFT.
    """
    ny, nx = values.shape
    Ly, Lx = _fft_len(ny, spec.pad_factor), _fft_len(nx, spec.pad_factor)
    wy = kernel_weights(ny, grid.hy, spec.beta)
    wx = kernel_weights(nx, grid.hx, spec.beta)
    khat = np.fft.fft(wy, Ly)[:, None] * np.fft.rfft(wx, Lx)[None, :]
    full = np.fft.irfft2(np.fft.rfft2(values, (Ly, Lx)) * khat, (Ly, Lx))
    return full[ny - 1:2 * ny - 1, nx - 1:2 * nx - 1]


def conv_matrix_2d(grid, beta):
    """Dense ``C_beta`` acting on y-blocked vectors: ``kron(C_y, C_x)``."""
    Cy = conv_matrix_1d(grid.ygrid.count, grid.hy, beta)
    Cx = conv_matrix_1d(grid.xgrid.count, grid.hx, beta)
    return np.kron(Cy, Cx)
