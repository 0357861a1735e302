"""Exact sampling of the spectral Ornstein-Uhlenbeck stochastic convolution.

Every mode `i` of the driving noise is `sigma_i beta_i(t) phi_i(x)` with
`sigma_i = lambda_i ** -rho`. Over one step of length `tau` the stochastic
integral `int e^{-lambda_i^alpha (t_{n+1} - r)} d beta_i(r)` is a centred
Gaussian of variance `(1 - e^{-2 lambda_i^alpha tau}) / (2 lambda_i^alpha)`,
so the convolution is sampled exactly, with no inner time stepping.

Ladders are drawn once at the finest step and aggregated to coarser steps
with the semigroup identity, which keeps all step sizes on one Brownian path.

Random numbers: one PCG64 stream per trajectory, seeded by
`SeedSequence(master_seed, spawn_key=(trajectory_index,))`; normals come from
`Generator.standard_normal` (ziggurat) as an `(n_fine, M)` block, step-major
then mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from fracheat.core.spectral import EigenBasis


def _frozen(values: ArrayLike) -> NDArray[np.float64]:
    array = np.array(values, dtype=np.float64)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class NoiseParams:
    """Noise and time-grid parameters shared by every trajectory of a study."""

    alpha: float
    """Fractional order in (0, 1)."""

    rho: float
    """Spatial decay exponent of the noise."""

    lambdas: NDArray[np.float64] = field(repr=False)
    """Laplacian eigenvalues of the retained modes."""

    sigma: NDArray[np.float64] = field(repr=False)
    """Mode amplitudes `lambda_i ** -rho` (all zero for the noise-free case)."""

    tau_fine: float
    """Finest step size."""

    n_fine: int
    """Number of finest steps."""

    @classmethod
    def from_basis(
        cls,
        basis: EigenBasis,
        alpha: float,
        rho: float,
        final_time: float,
        n_fine: int,
        *,
        sigma_zero: bool = False,
    ) -> NoiseParams:
        """Build parameters with `sigma_i = lambda_i ** -rho` on `n_fine` steps of `[0, final_time]`.

        Raises:
            ValueError: If alpha, rho, the final time or the step count is out of range.
        """
        if not 0.0 < alpha < 1.0:
            msg = f"alpha must lie in (0, 1), got {alpha}"
            raise ValueError(msg)
        if rho < 0.0:
            msg = f"rho must be nonnegative, got {rho}"
            raise ValueError(msg)
        if final_time <= 0.0 or n_fine < 1:
            msg = f"Need T > 0 and at least one step, got T={final_time}, n_fine={n_fine}"
            raise ValueError(msg)
        sigma = np.zeros(basis.modes) if sigma_zero else basis.lambdas**-rho
        return cls(
            alpha=alpha,
            rho=rho,
            lambdas=_frozen(basis.lambdas),
            sigma=_frozen(sigma),
            tau_fine=final_time / n_fine,
            n_fine=n_fine,
        )

    @property
    def modes(self) -> int:
        """Number of noise modes."""
        return self.lambdas.shape[0]

    @property
    def final_time(self) -> float:
        """End of the simulated interval."""
        return self.n_fine * self.tau_fine

    @property
    def rates(self) -> NDArray[np.float64]:
        """Decay rates `lambda_i ** alpha` of the fractional operator."""
        return self.lambdas**self.alpha


@dataclass(frozen=True)
class NoiseLadder:
    """Per-step, per-mode stochastic-integral increments (before sigma scaling)."""

    increments: NDArray[np.float64] = field(repr=False)
    """`(steps, M)` matrix; row n holds the integrals over `[t_n, t_n + tau]`."""

    tau: float
    """Step size the increments belong to."""

    def __post_init__(self) -> None:
        object.__setattr__(self, "increments", _frozen(self.increments))
        if self.increments.ndim != 2:  # noqa: PLR2004
            msg = f"Ladder increments must be a (steps, modes) matrix, got shape {self.increments.shape}"
            raise ValueError(msg)

    @property
    def steps(self) -> int:
        """Number of time steps."""
        return self.increments.shape[0]


@dataclass(frozen=True)
class OUState:
    """Values of the sigma-scaled stochastic convolution at time `t`."""

    values: NDArray[np.float64] = field(repr=False)
    t: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values))


def zero_state(modes: int) -> OUState:
    """The stochastic convolution at `t = 0`."""
    return OUState(np.zeros(modes), 0.0)


def ou_variance(lam: ArrayLike, alpha: float, t: ArrayLike) -> NDArray[np.float64] | float:
    """Variance `(1 - e^{-2 lam^alpha t}) / (2 lam^alpha)` of one OU mode.

    Evaluated as `-expm1(-2 lam^alpha t) / (2 lam^alpha)` so small `lam^alpha t`
    loses no digits.

    Raises:
        ValueError: If any `t` is negative.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0):
        msg = "OU variance needs t >= 0"
        raise ValueError(msg)
    rate = np.asarray(lam, dtype=np.float64) ** alpha
    result = -np.expm1(-2.0 * rate * t) / (2.0 * rate)
    return float(result) if result.ndim == 0 else result


def trajectory_stream(master_seed: int, trajectory_index: int) -> np.random.Generator:
    """Independent random stream of trajectory `trajectory_index`.

    Raises:
        ValueError: If the seed or the index is negative.
    """
    if master_seed < 0 or trajectory_index < 0:
        msg = f"Seed and trajectory index must be nonnegative, got {master_seed}, {trajectory_index}"
        raise ValueError(msg)
    sequence = np.random.SeedSequence(master_seed, spawn_key=(trajectory_index,))
    return np.random.Generator(np.random.PCG64(sequence))


def sample_ladder(params: NoiseParams, stream: np.random.Generator) -> NoiseLadder:
    """Draw the finest ladder of exact stochastic-integral increments."""
    scale = np.sqrt(ou_variance(params.lambdas, params.alpha, params.tau_fine))
    normals = stream.standard_normal((params.n_fine, params.modes))
    return NoiseLadder(normals * scale, params.tau_fine)


def coarsen(ladder: NoiseLadder, params: NoiseParams) -> NoiseLadder:
    """Aggregate pairs of steps into one step of twice the size, pathwise.

    `I_{2tau}[m] = e^{-lambda^alpha tau} I_tau[2m] + I_tau[2m + 1]`, which is the
    same stochastic integral over the longer interval, not an approximation.

    Raises:
        ValueError: If the ladder has an odd number of steps.
    """
    if ladder.steps % 2:
        msg = f"Cannot coarsen a ladder with an odd number of steps ({ladder.steps})"
        raise ValueError(msg)
    decay = np.exp(-params.rates * ladder.tau)
    return NoiseLadder(decay * ladder.increments[0::2] + ladder.increments[1::2], 2.0 * ladder.tau)


def ou_advance(state: OUState, step_increments: ArrayLike, params: NoiseParams, tau: float) -> OUState:
    """Advance the stochastic convolution by one step of length `tau`."""
    decay = np.exp(-params.rates * tau)
    return OUState(decay * state.values + params.sigma * np.asarray(step_increments), state.t + tau)


def correction_integral(state: OUState, params: NoiseParams, tau: float) -> NDArray[np.float64]:
    """Per-mode `int_0^{t_n} A^{-alpha} [S(t_n - r) - S(t_n + tau - r)] dB(r)`.

    Since `S(t_n + tau - r) = S(tau) S(t_n - r)` mode-wise, this is
    `lambda_i^{-alpha} (1 - e^{-lambda_i^alpha tau})` times the current state.
    """
    rates = params.rates
    return -np.expm1(-rates * tau) / rates * state.values
