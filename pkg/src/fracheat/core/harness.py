"""Monte Carlo strong-error estimation on coupled dyadic time grids.

For every trajectory one ladder is sampled at the finest step `T / (2 max N)`
and coarsened level by level, so `u_{2N}` and `u_N` of a rate row are driven by
the same Brownian path. The strong error of a row is the root mean square of
`||u_{2N,k} - u_{N,k}||` over trajectories, and the rate compares neighbouring
rows on a log2 scale.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Any

import numpy as np

from fracheat.config import ConfigError, parse_int
from fracheat.core.noise import NoiseParams, coarsen, sample_ladder, trajectory_stream
from fracheat.core.schemes import SINE, ZERO, NumericalBlowUpError, SchemeConfig, SchemeKind, integrate
from fracheat.core.spectral import build_basis, project
from fracheat.utils.io import format_float, render_csv
from fracheat.utils.progress import TrajectoryProgress, print_status

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable, Mapping, Sequence

    from numpy.typing import NDArray

    from fracheat.core.noise import NoiseLadder
    from fracheat.core.schemes import NonlinearitySpec
    from fracheat.core.spectral import EigenBasis, SpectralField

CSV_HEADER = ("scheme", "alpha", "rho", "M", "K", "T", "seed", "N", "error", "rate", "theory_rate")

TABLE1_ALPHAS = (0.4, 0.6, 0.8)
FIG1_ALPHAS = (0.6,)

FIELD_ALIASES = {
    "M": "modes",
    "K": "trajectories",
    "T": "final_time",
    "N": "step_counts",
    "N_list": "step_counts",
    "master_seed": "seed",
    "scheme_kind": "scheme",
}


def initial_data(x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Smooth initial condition `u_0(x) = sin(2 pi x)`."""
    return np.sin(2.0 * np.pi * x)


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in {"true", "yes", "1", "on"}:
        return True
    if value in {"false", "no", "0", "off"}:
        return False
    msg = f"expected true/false, got {raw!r}"
    raise ValueError(msg)


def _parse_steps(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.replace(" ", "").split(",") if part)


_PARSERS: dict[str, Callable[[str], Any]] = {
    "alpha": float,
    "rho": float,
    "modes": int,
    "final_time": float,
    "step_counts": _parse_steps,
    "trajectories": int,
    "seed": parse_int,
    "scheme": str.strip,
    "epsilon": float,
    "sigma_zero": _parse_bool,
    "f_zero": _parse_bool,
    "delta": float,
}


@dataclass(frozen=True)
class StudyConfig:
    """One convergence study: a parameter point, a ladder of step counts and a seed."""

    alpha: float = 0.6
    rho: float = 0.2
    modes: int = 128
    """Number of Galerkin modes M."""
    final_time: float = 0.2
    """Final time T; errors are measured there."""
    step_counts: tuple[int, ...] = (2, 4, 8)
    """Increasing powers of two N; the finest simulated grid is `2 max(N)`."""
    trajectories: int = 200
    """Monte Carlo sample size K."""
    seed: int = 0
    """Master seed of the per-trajectory streams."""
    scheme: SchemeKind = SchemeKind.MODIFIED
    epsilon: float = 1e-6
    """Small parameter of the regularity index."""
    sigma_zero: bool = False
    """Switch the noise off (deterministic checks)."""
    f_zero: bool = False
    """Replace `f = sin` by `f = 0` (linear checks)."""
    delta: float = 1e-8
    """Guard of the Lagrange quotient."""

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        except ValueError as error:
            msg = f"Unknown scheme {self.scheme!r}; choose from {', '.join(SchemeKind)}"
            raise ConfigError(msg) from error
        object.__setattr__(self, "step_counts", tuple(int(n) for n in self.step_counts))

        problems = []
        if not 0.0 < self.alpha < 1.0:
            problems.append(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.rho < 0.0:
            problems.append(f"rho must be nonnegative, got {self.rho}")
        if self.modes < 1:
            problems.append(f"M must be positive, got {self.modes}")
        if self.final_time <= 0.0:
            problems.append(f"T must be positive, got {self.final_time}")
        if self.trajectories < 1:
            problems.append(f"K must be positive, got {self.trajectories}")
        if not 0 <= self.seed < 2**64:
            problems.append(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.epsilon <= 0.0 or self.delta <= 0.0:
            problems.append("epsilon and delta must be positive")
        steps = self.step_counts
        if not steps:
            problems.append("N list is empty")
        elif any(n < 1 or n & (n - 1) for n in steps):
            problems.append(f"every N must be a power of two, got {list(steps)}")
        elif any(b <= a for a, b in zip(steps, steps[1:])):
            problems.append(f"N list must be strictly increasing, got {list(steps)}")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def finest_steps(self) -> int:
        """Step count of the sampled ladder, `2 max(N)`."""
        return 2 * max(self.step_counts)

    @property
    def levels(self) -> tuple[int, ...]:
        """All simulated step counts, ascending."""
        return (*self.step_counts, self.finest_steps)

    @property
    def nonlinearity(self) -> NonlinearitySpec:
        """The reaction term of the study."""
        return ZERO if self.f_zero else SINE

    def label(self) -> str:
        """Short description for progress lines."""
        return f"{self.scheme} alpha={self.alpha:g} rho={self.rho:g} M={self.modes}"

    def scheme_config(self, steps: int) -> SchemeConfig:
        """Scheme settings on the grid of `steps` steps."""
        return SchemeConfig(
            alpha=self.alpha,
            tau=self.final_time / steps,
            modes=self.modes,
            f=self.nonlinearity,
            delta=self.delta,
            kind=self.scheme,
        )

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], base: StudyConfig | None = None) -> StudyConfig:
        """Build a study from `key -> value` pairs layered over `base`.

        String values are parsed (`N` as a comma list, booleans as true/false);
        the CSV column names `M`, `K`, `T`, `N` and `seed` are accepted as keys.

        Raises:
            ConfigError: On unknown keys or unparseable values.
        """
        changes: dict[str, Any] = {}
        for key, value in mapping.items():
            name = FIELD_ALIASES.get(key, key)
            if name not in _PARSERS:
                msg = f"Unknown study key {key!r}; known keys: {', '.join(sorted(_PARSERS))}"
                raise ConfigError(msg)
            if isinstance(value, str):
                try:
                    value = _PARSERS[name](value)
                except ValueError as error:
                    msg = f"Invalid value for {key!r}: {error}"
                    raise ConfigError(msg) from error
            changes[name] = value
        return dataclasses.replace(base or cls(), **changes)


@dataclass(frozen=True)
class RateRow:
    """One row of a rate table: the error of the pair `(u_{2N}, u_N)`."""

    steps: int
    error: float
    rate: float | None
    std_error: float | None = None


@dataclass(frozen=True)
class RateTable:
    """Errors, empirical rates and theory for one study."""

    study: StudyConfig
    rows: tuple[RateRow, ...]
    theory_rate: float | None
    gamma: float
    fitted_rate: float | None
    wall_time: float = field(default=0.0, compare=False)

    @property
    def errors(self) -> dict[int, float]:
        """Mapping N -> error."""
        return {row.steps: row.error for row in self.rows}

    @property
    def rates(self) -> dict[int, float]:
        """Mapping N -> empirical rate (rows after the first)."""
        return {row.steps: row.rate for row in self.rows if row.rate is not None}

    def csv_rows(self) -> list[list[str]]:
        """Rows in the `CSV_HEADER` column order."""
        study = self.study
        return [
            [
                str(study.scheme),
                format_float(study.alpha),
                format_float(study.rho),
                str(study.modes),
                str(study.trajectories),
                format_float(study.final_time),
                str(study.seed),
                str(row.steps),
                format_float(row.error),
                format_float(row.rate),
                format_float(self.theory_rate),
            ]
            for row in self.rows
        ]


@lru_cache(maxsize=16)
def build_problem(study: StudyConfig) -> tuple[EigenBasis, NoiseParams, SpectralField]:
    """Basis, noise parameters on the finest grid, and projected initial data."""
    basis = build_basis(study.modes)
    params = NoiseParams.from_basis(
        basis,
        study.alpha,
        study.rho,
        study.final_time,
        study.finest_steps,
        sigma_zero=study.sigma_zero,
    )
    return basis, params, project(initial_data, basis)


def _coarsen_to(ladder: NoiseLadder, params: NoiseParams, steps: int) -> NoiseLadder:
    while ladder.steps > steps:
        ladder = coarsen(ladder, params)
    return ladder


def run_trajectory(study: StudyConfig, k: int) -> dict[int, SpectralField]:
    """Solve trajectory `k` at every level of the study on one Brownian path.

    Returns:
        Mapping step count -> `u` at time T, for every N and for `2 max(N)`.

    Raises:
        ValueError: If `k` is not a valid trajectory index.
        NumericalBlowUpError: If the trajectory blows up (annotated with `k`).
    """
    if not 0 <= k < study.trajectories:
        msg = f"Trajectory index {k} outside 0..{study.trajectories - 1}"
        raise ValueError(msg)
    basis, params, u0 = build_problem(study)
    ladder = sample_ladder(params, trajectory_stream(study.seed, k))

    solutions: dict[int, SpectralField] = {}
    for steps in reversed(study.levels):
        ladder = _coarsen_to(ladder, params, steps)
        try:
            solutions[steps] = integrate(study.scheme_config(steps), u0, ladder, basis, params)[steps]
        except NumericalBlowUpError as error:
            error.trajectory = k
            error.add_note(f"trajectory {k} of {study.label()}, N={steps}")
            raise
    return solutions


def verify_coupling(study: StudyConfig, k: int, steps: int) -> bool:
    """Re-derive `u_N` of trajectory `k` from a fresh coarsening of its fine ladder.

    Returns:
        True when the re-derived solution equals the harness one bit for bit.
    """
    basis, params, u0 = build_problem(study)
    ladder = _coarsen_to(sample_ladder(params, trajectory_stream(study.seed, k)), params, steps)
    direct = integrate(study.scheme_config(steps), u0, ladder, basis, params)[steps]
    return bool(np.array_equal(direct.coeffs, run_trajectory(study, k)[steps].coeffs))


def single_solution(study: StudyConfig, k: int, steps: int | None = None) -> tuple[SpectralField, NoiseLadder]:
    """Solve one seeded trajectory on `steps` steps (default `max(N)`).

    Returns:
        `u` at time T and the finest ladder the solution was driven by.

    Raises:
        ValueError: If `k` is negative or `steps` does not divide the finest grid.
    """
    steps = max(study.step_counts) if steps is None else steps
    if steps < 1 or study.finest_steps % steps or (study.finest_steps // steps) & (study.finest_steps // steps - 1):
        msg = f"N={steps} is not a dyadic coarsening of {study.finest_steps} steps"
        raise ValueError(msg)
    basis, params, u0 = build_problem(study)
    fine = sample_ladder(params, trajectory_stream(study.seed, k))
    ladder = _coarsen_to(fine, params, steps)
    return integrate(study.scheme_config(steps), u0, ladder, basis, params)[steps], fine


def squared_differences(solutions: Sequence[Mapping[int, SpectralField]], steps: int) -> NDArray[np.float64]:
    """Per-trajectory `||u_{2N} - u_N||^2` (Parseval L2 norm)."""
    out = np.empty(len(solutions))
    for k, solution in enumerate(solutions):
        diff = solution[2 * steps].coeffs - solution[steps].coeffs
        out[k] = float(np.dot(diff, diff))
    return out


def mc_error(
    study: StudyConfig,
    steps: int,
    solutions: Sequence[Mapping[int, SpectralField]] | None = None,
) -> float:
    """Root-mean-square strong error `(K^-1 sum_k ||u_{2N,k} - u_{N,k}||^2)^(1/2)`.

    Args:
        study: The study.
        steps: Row N; `2N` must be simulated too.
        solutions: Per-trajectory solutions from `run_trajectory` (computed when omitted).

    Raises:
        ValueError: If `steps` is not in the study or there are no trajectories.
    """
    if steps not in study.step_counts:
        msg = f"N={steps} is not in the study's N list {list(study.step_counts)}"
        raise ValueError(msg)
    if solutions is None:
        solutions = [run_trajectory(study, k) for k in range(study.trajectories)]
    if not solutions:
        msg = "Cannot estimate an error from zero trajectories"
        raise ValueError(msg)
    squares = squared_differences(solutions, steps)
    return math.sqrt(math.fsum(squares) / len(squares))


def mc_standard_error(squares: NDArray[np.float64]) -> float | None:
    """Naive standard error of the RMS error, `se(mean e^2) / (2 e)`."""
    if squares.size < 2:  # noqa: PLR2004
        return None
    mean = math.fsum(squares) / squares.size
    if mean <= 0.0:
        return None
    spread = math.sqrt(math.fsum((squares - mean) ** 2) / (squares.size - 1))
    return spread / math.sqrt(squares.size) / (2.0 * math.sqrt(mean))


def _checked_errors(errors: Mapping[int, float]) -> list[tuple[int, float]]:
    items = sorted(errors.items())
    if len(items) < 2:  # noqa: PLR2004
        msg = "Need errors for at least two step counts"
        raise ValueError(msg)
    for steps, error in items:
        if not error > 0.0:
            msg = f"Error at N={steps} must be positive, got {error}"
            raise ValueError(msg)
    return items


def empirical_rate(errors: Mapping[int, float]) -> dict[int, float]:
    """Observed order at each row after the first.

    `rate(N) = ln(e(N_prev) / e(N)) / ln(N / N_prev)`, which for doubling rows is
    `log2(||u_N - u_{N/2}|| / ||u_{2N} - u_N||)`.

    Raises:
        ValueError: With fewer than two rows or a nonpositive error.
    """
    items = _checked_errors(errors)
    return {
        steps: math.log(prev_error / error) / math.log(steps / prev_steps)
        for (prev_steps, prev_error), (steps, error) in zip(items, items[1:])
    }


def fitted_rate(errors: Mapping[int, float]) -> float:
    """Least-squares slope of `-log2(error)` against `log2(N)` over all rows.

    Raises:
        ValueError: With fewer than two rows or a nonpositive error.
    """
    items = _checked_errors(errors)
    log_steps = np.log2([steps for steps, _ in items])
    log_errors = np.log2([error for _, error in items])
    slope = np.polyfit(log_steps, log_errors, 1)[0]
    return float(-slope)


def regularity_index(alpha: float, rho: float, d: int = 1, epsilon: float = 1e-6) -> float:
    """Regularity index `gamma = 2 rho + alpha - (d + epsilon) / 2`."""
    return 2.0 * rho + alpha - (d + epsilon) / 2.0


def theoretical_rate(
    alpha: float,
    rho: float,
    d: int = 1,
    epsilon: float = 1e-6,
    scheme: SchemeKind | str = SchemeKind.MODIFIED,
) -> float:
    """Predicted strong order: `min(gamma / alpha, 1)` (modified) or `min(gamma / (2 alpha), 1/2)` (baseline).

    Raises:
        ValueError: If `gamma <= 0`, where the estimates do not apply.
    """
    gamma = regularity_index(alpha, rho, d, epsilon)
    if gamma <= 0.0:
        msg = f"gamma = 2 rho + alpha - (d + eps)/2 = {gamma:.6g} <= 0 for alpha={alpha}, rho={rho}; no rate predicted"
        raise ValueError(msg)
    if SchemeKind(scheme) == SchemeKind.MODIFIED:
        return min(gamma / alpha, 1.0)
    return min(gamma / (2.0 * alpha), 0.5)


def _collect(study: StudyConfig, threads: int, tracker: TrajectoryProgress) -> list[dict[int, SpectralField]]:
    slots: list[dict[int, SpectralField] | None] = [None] * study.trajectories
    if threads == 1:
        for k in range(study.trajectories):
            slots[k] = run_trajectory(study, k)
            tracker.advance()
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(run_trajectory, study, k): k for k in range(study.trajectories)}
            try:
                for future in as_completed(futures):
                    slots[futures[future]] = future.result()
                    tracker.advance()
            except BaseException:
                pool.shutdown(wait=True, cancel_futures=True)
                raise
    return [slot for slot in slots if slot is not None]


def run_study(
    study: StudyConfig,
    threads: int = 1,
    *,
    progress: bool = True,
    strict_theory: bool = False,
) -> RateTable:
    """Run every trajectory of a study and tabulate errors and rates.

    Trajectories may run on several threads; each one fills its own slot and the
    reduction happens afterwards in trajectory order, so the table does not
    depend on `threads`.

    Args:
        study: Study to run.
        threads: Worker threads.
        progress: Report progress on stderr.
        strict_theory: Turn `gamma <= 0` into a `ConfigError` instead of a warning.

    Returns:
        The rate table.

    Raises:
        ConfigError: On `threads < 1`, or `gamma <= 0` with `strict_theory`.
        NumericalBlowUpError: If any trajectory blows up.
    """
    if threads < 1:
        msg = f"threads must be positive, got {threads}"
        raise ConfigError(msg)
    gamma = regularity_index(study.alpha, study.rho, 1, study.epsilon)
    try:
        theory: float | None = theoretical_rate(study.alpha, study.rho, 1, study.epsilon, study.scheme)
    except ValueError as error:
        if strict_theory:
            raise ConfigError(str(error)) from error
        print_status(f"warning: {error}")
        theory = None

    tracker = TrajectoryProgress(study.trajectories, study.label(), enabled=progress)
    solutions = _collect(study, threads, tracker)
    wall_time = tracker.finish()

    errors: dict[int, float] = {}
    std_errors: dict[int, float | None] = {}
    for steps in study.step_counts:
        errors[steps] = mc_error(study, steps, solutions)
        std_errors[steps] = mc_standard_error(squared_differences(solutions, steps))

    positive = all(error > 0.0 for error in errors.values())
    rates = empirical_rate(errors) if positive and len(errors) > 1 else {}
    rows = tuple(
        RateRow(steps=steps, error=errors[steps], rate=rates.get(steps), std_error=std_errors[steps])
        for steps in study.step_counts
    )
    return RateTable(
        study=study,
        rows=rows,
        theory_rate=theory,
        gamma=gamma,
        fitted_rate=fitted_rate(errors) if positive and len(errors) > 1 else None,
        wall_time=wall_time,
    )


def render_tables(tables: Iterable[RateTable]) -> str:
    """CSV text: one header, then the rows of every table in order."""
    return render_csv(CSV_HEADER, [row for table in tables for row in table.csv_rows()])


def table1_study(alpha: float, **overrides: Any) -> StudyConfig:
    """Preset for one alpha column of the rho=0.2 rate table."""
    base = StudyConfig(
        alpha=alpha,
        rho=0.2,
        modes=500,
        final_time=0.2,
        step_counts=(2, 4, 8),
        trajectories=1000,
        scheme=SchemeKind.MODIFIED,
    )
    return StudyConfig.from_mapping(overrides, base=base)


def fig1_study(scheme: SchemeKind | str, alpha: float = 0.6, **overrides: Any) -> StudyConfig:
    """Preset for the smooth-noise (rho=1.2) experiment."""
    base = StudyConfig(
        alpha=alpha,
        rho=1.2,
        modes=100,
        final_time=0.5,
        step_counts=(2, 4, 8, 16),
        trajectories=1000,
    )
    return StudyConfig.from_mapping({**overrides, "scheme": scheme}, base=base)
