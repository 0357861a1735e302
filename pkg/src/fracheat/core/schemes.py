"""Time stepping for the OU-transformed equation `dz + A^alpha z dt = f(z + OU) dt`.

Two schemes share the same semi-implicit structure
`z_{n+1} = (I + tau A^alpha)^{-1} [z_n + tau f(u_n) + corrections]`:

- `baseline`: no corrections (plain semi-implicit Euler).
- `modified`: from step 1 on, adds
  `- tau q_n OU_n + q_n int_0^{t_n} A^{-alpha} [S(t_n - r) - S(t_{n+1} - r)] dB(r)`
  where `q_n = (f(u_n) - f(u_{n-1})) / (u_n - u_{n-1})` pointwise.

Pointwise products are evaluated on the collocation grid and projected back.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np

from fracheat.core.noise import correction_integral, ou_advance, zero_state
from fracheat.core.spectral import SpectralField, scale_by_spectrum, to_physical, to_spectral

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable

    from numpy.typing import ArrayLike, NDArray

    from fracheat.core.noise import NoiseLadder, NoiseParams, OUState
    from fracheat.core.spectral import EigenBasis

    ScalarMap = Callable[[NDArray[np.float64]], NDArray[np.float64]]


class NumericalBlowUpError(FloatingPointError):
    """A trajectory produced a non-finite coefficient."""

    def __init__(self, step: int, what: str) -> None:
        self.step = step
        self.what = what
        self.trajectory: int | None = None
        super().__init__(f"Non-finite {what} coefficients at step {step}")


class SchemeKind(StrEnum):
    """Available time discretizations."""

    BASELINE = "baseline"
    MODIFIED = "modified"


@dataclass(frozen=True)
class NonlinearitySpec:
    """A Nemytskii nonlinearity with its derivative, both vectorized over arrays."""

    f: ScalarMap
    f_prime: ScalarMap
    lipschitz_note: str = ""


def _zero(v: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.zeros_like(v)


def _one(v: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.ones_like(v)


def _identity(v: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.array(v, dtype=np.float64)


SINE = NonlinearitySpec(np.sin, np.cos, "Globally Lipschitz with constant 1; |f'| <= 1.")
ZERO = NonlinearitySpec(_zero, _zero, "Linear problem.")
IDENTITY = NonlinearitySpec(_identity, _one, "Lipschitz constant 1.")


@dataclass(frozen=True)
class SchemeConfig:
    """Discretization settings of one time grid."""

    alpha: float
    tau: float
    modes: int
    f: NonlinearitySpec = SINE
    delta: float = 1e-8
    """Below this gap `|u_n - u_{n-1}|` the quotient falls back to `f'(u_n)`."""
    kind: SchemeKind = SchemeKind.MODIFIED

    def resolvent(self, lambdas: NDArray[np.float64]) -> NDArray[np.float64]:
        """Symbol of `(I + tau A^alpha)^{-1}`."""
        return 1.0 / (1.0 + self.tau * lambdas**self.alpha)


@dataclass(frozen=True)
class TrajectoryState:
    """State of one trajectory at step `step`; `u` is always `z + ou`."""

    z: SpectralField
    u: SpectralField
    ou: OUState
    u_prev: SpectralField | None
    step: int


def initial_state(u0: SpectralField) -> TrajectoryState:
    """State at `t = 0`: the OU part vanishes, so `z_0 = u_0`."""
    return TrajectoryState(z=u0, u=u0, ou=zero_state(u0.modes), u_prev=None, step=0)


def nemytskii(f: NonlinearitySpec, u: SpectralField, basis: EigenBasis) -> SpectralField:
    """Pseudospectral `f(u(x))`: evaluate on the grid, apply `f`, project back."""
    return to_spectral(f.f(to_physical(u, basis)), basis)


def quotient(
    f: NonlinearitySpec,
    u_n: SpectralField,
    u_prev: SpectralField,
    basis: EigenBasis,
    delta: float,
) -> NDArray[np.float64]:
    """Divided difference `(f(a) - f(b)) / (a - b)` on the collocation grid.

    Where `|a - b| < delta` the limit value `f'(a)` is used instead.
    """
    a = to_physical(u_n, basis)
    b = to_physical(u_prev, basis)
    gap = a - b
    close = np.abs(gap) < delta
    safe_gap = np.where(close, 1.0, gap)
    return np.where(close, f.f_prime(a), (f.f(a) - f.f(b)) / safe_gap)


def _advance(
    state: TrajectoryState,
    rhs: NDArray[np.float64],
    ladder_row: ArrayLike,
    cfg: SchemeConfig,
    basis: EigenBasis,
    params: NoiseParams,
) -> TrajectoryState:
    z = scale_by_spectrum(SpectralField(rhs), cfg.resolvent, basis)
    ou = ou_advance(state.ou, ladder_row, params, cfg.tau)
    u = SpectralField(z.coeffs + ou.values)
    return TrajectoryState(z=z, u=u, ou=ou, u_prev=state.u, step=state.step + 1)


def baseline_step(
    state: TrajectoryState,
    ladder_row: ArrayLike,
    cfg: SchemeConfig,
    basis: EigenBasis,
    params: NoiseParams,
) -> TrajectoryState:
    """One semi-implicit Euler step `z_{n+1} = (I + tau A^alpha)^{-1} (z_n + tau f(u_n))`."""
    rhs = state.z.coeffs + cfg.tau * nemytskii(cfg.f, state.u, basis).coeffs
    return _advance(state, rhs, ladder_row, cfg, basis, params)


def first_step(
    state: TrajectoryState,
    ladder_row: ArrayLike,
    cfg: SchemeConfig,
    basis: EigenBasis,
    params: NoiseParams,
) -> TrajectoryState:
    """Step from `t_0`; the modified scheme has no `u_{-1}`, so this is a baseline step.

    Raises:
        ValueError: If the state is not at step 0.
    """
    if state.step != 0:
        msg = f"first_step expects step 0, got step {state.step}"
        raise ValueError(msg)
    return baseline_step(state, ladder_row, cfg, basis, params)


def modified_step(
    state: TrajectoryState,
    ladder_row: ArrayLike,
    cfg: SchemeConfig,
    basis: EigenBasis,
    params: NoiseParams,
) -> TrajectoryState:
    """One step of the corrected scheme, valid from step 1 on.

    Raises:
        ValueError: If the state has no previous solution (step 0).
    """
    if state.step == 0 or state.u_prev is None:
        msg = "modified_step needs u_{n-1}; use first_step at n=0"
        raise ValueError(msg)

    q = quotient(cfg.f, state.u, state.u_prev, basis, cfg.delta)
    ou_field = SpectralField(state.ou.values)
    corr_field = SpectralField(correction_integral(state.ou, params, cfg.tau))
    drift = to_spectral(q * to_physical(ou_field, basis), basis).coeffs
    memory = to_spectral(q * to_physical(corr_field, basis), basis).coeffs

    rhs = state.z.coeffs + cfg.tau * nemytskii(cfg.f, state.u, basis).coeffs
    rhs = rhs - cfg.tau * drift + memory
    return _advance(state, rhs, ladder_row, cfg, basis, params)


def _check_finite(state: TrajectoryState) -> None:
    for what, values in (("z", state.z.coeffs), ("OU", state.ou.values), ("u", state.u.coeffs)):
        if not np.all(np.isfinite(values)):
            raise NumericalBlowUpError(state.step, what)


def integrate(
    cfg: SchemeConfig,
    u0: SpectralField,
    ladder: NoiseLadder,
    basis: EigenBasis,
    params: NoiseParams,
    record_at: Iterable[int] = (),
    on_step: Callable[[TrajectoryState], None] | None = None,
) -> dict[int, SpectralField]:
    """Run a whole trajectory on the grid of `ladder`.

    Args:
        cfg: Scheme settings; `cfg.tau` must equal the ladder step.
        u0: Initial data.
        ladder: Increments for every step of `[0, T]`.
        basis: Eigenbasis matching `cfg.modes`.
        params: Noise parameters.
        record_at: Step indices whose solution `u` is returned besides the last one.
        on_step: Optional hook called with every new state.

    Returns:
        Mapping step index -> `u` at that step; the final index is always present.

    Raises:
        ValueError: If the ladder, the configuration and `T` disagree on the grid.
        NumericalBlowUpError: If a coefficient becomes non-finite.
    """
    steps = ladder.steps
    final_time = params.final_time
    if abs(steps * cfg.tau - final_time) > 1e-12 * max(1.0, final_time) or not np.isclose(
        ladder.tau, cfg.tau, rtol=1e-12, atol=0.0
    ):
        msg = f"Ladder of {steps} steps of {ladder.tau} does not match tau={cfg.tau} on [0, {final_time}]"
        raise ValueError(msg)
    if ladder.increments.shape[1] != cfg.modes or basis.modes != cfg.modes:
        msg = f"Mode count mismatch: config {cfg.modes}, ladder {ladder.increments.shape[1]}, basis {basis.modes}"
        raise ValueError(msg)

    wanted = {n for n in record_at if 0 <= n <= steps} | {steps}
    state = initial_state(u0)
    recorded: dict[int, SpectralField] = {0: u0} if 0 in wanted else {}
    for n in range(steps):
        if n == 0:
            state = first_step(state, ladder.increments[n], cfg, basis, params)
        elif cfg.kind == SchemeKind.MODIFIED:
            state = modified_step(state, ladder.increments[n], cfg, basis, params)
        else:
            state = baseline_step(state, ladder.increments[n], cfg, basis, params)
        _check_finite(state)
        if on_step is not None:
            on_step(state)
        if state.step in wanted:
            recorded[state.step] = state.u
    return recorded
