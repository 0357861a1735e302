"""fracheat package.

Spectral-Galerkin time stepping for the fractional stochastic heat equation
`du = -(-Laplace)^alpha u dt + sin(u) dt + dB` on (0, 1), with the semi-implicit
Euler scheme, the corrected high-order scheme and a Monte Carlo
convergence-rate harness.
"""

from __future__ import annotations

from fracheat._internal.cli import app
from fracheat._internal.debug import _get_version
from fracheat.config import Config, ConfigError
from fracheat.core.harness import (
    RateTable,
    StudyConfig,
    empirical_rate,
    fig1_study,
    fitted_rate,
    mc_error,
    render_tables,
    run_study,
    run_trajectory,
    table1_study,
    theoretical_rate,
)
from fracheat.core.noise import NoiseLadder, NoiseParams, OUState
from fracheat.core.schemes import NumericalBlowUpError, SchemeConfig, SchemeKind, integrate
from fracheat.core.spectral import EigenBasis, SpectralField, build_basis

__version__ = _get_version()
__all__: list[str] = [
    "Config",
    "ConfigError",
    "EigenBasis",
    "NoiseLadder",
    "NoiseParams",
    "NumericalBlowUpError",
    "OUState",
    "RateTable",
    "SchemeConfig",
    "SchemeKind",
    "SpectralField",
    "StudyConfig",
    "app",
    "build_basis",
    "empirical_rate",
    "fig1_study",
    "fitted_rate",
    "integrate",
    "mc_error",
    "render_tables",
    "run_study",
    "run_trajectory",
    "table1_study",
    "theoretical_rate",
]
