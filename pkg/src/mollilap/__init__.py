"""Mollified inversion of the real Laplace transform.

Two solvers recover ``f`` from samples of ``g = L f`` on a half-line:

* :mod:`mollilap.cauchy` solves a regularized sideways Cauchy problem for the
  Laplace equation, discretized with a compact fourth-order scheme, and reads
  ``f`` off one row of the harmonic field by a cosine transform.
* :mod:`mollilap.spectral` works in logarithmic time, where ``L* L`` is a
  convolution, and divides by a mollified Fourier multiplier.

The regularization parameter is chosen by the discrepancy principle
(:mod:`mollilap.morozov`); :mod:`mollilap.bench` runs error tables and rate
studies on three reference examples (:mod:`mollilap.examples`).
"""

from .bench import RatePoint, RunReport, rate_study, rel_errors, run_example
from .cauchy import RegularizedSolveConfig, reconstruct_f, solve_u_beta
from .compact_fd import assemble_system, build_compact, second_derivative
from .errors import ConfigError, InputError, SolverError
from .examples import NoiseSpec, add_noise, example, forward_laplace, sample_G, u_exact
from .grids import Field2D, Grid1D, Grid2D, RealSignal, make_grid2d
from .mollifier import MollifierSpec, apply_C_beta_1d, apply_C_beta_2d, moll_diagnostics
from .morozov import MorozovConfig, select_beta
from .spectral import make_log_map, operator_norm, solve_spectral, spectral_data

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Field2D", "Grid1D", "Grid2D", "InputError", "MollifierSpec",
    "MorozovConfig", "NoiseSpec", "RatePoint", "RealSignal", "RegularizedSolveConfig",
    "RunReport", "SolverError", "add_noise", "apply_C_beta_1d", "apply_C_beta_2d",
    "assemble_system", "build_compact", "example", "forward_laplace", "make_grid2d",
    "make_log_map", "moll_diagnostics", "operator_norm", "rate_study", "reconstruct_f",
    "rel_errors", "run_example", "sample_G", "second_derivative", "select_beta",
    "solve_spectral", "solve_u_beta", "spectral_data", "u_exact",
]
