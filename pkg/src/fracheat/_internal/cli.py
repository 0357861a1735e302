"""Command-line interface for fracheat."""

from __future__ import annotations

import functools
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any, Optional

import typer
from rich.console import Console

from fracheat._internal import debug
from fracheat.config import Config, ConfigError, read_config_file
from fracheat.core.harness import (
    FIELD_ALIASES,
    FIG1_ALPHAS,
    TABLE1_ALPHAS,
    StudyConfig,
    fig1_study,
    render_tables,
    run_study,
    single_solution,
    table1_study,
)
from fracheat.core.schemes import NumericalBlowUpError, SchemeKind
from fracheat.core.spectral import build_basis, sobolev_norm
from fracheat.utils.io import dump_ladder, dumps_json, write_json
from fracheat.utils.progress import print_status

if TYPE_CHECKING:
    from collections.abc import Callable

    from fracheat.core.harness import RateTable

STUDY_DIAGRAM = """\
┌──────────────────────────────────────────────────────────────┐
│                          Study Flow                          │
├──────────────────────────────────────────────────────────────┤
│                                                              │
│  (seed, k) ─→ fine ladder ─┬─→ solve on 2·max(N) steps       │
│                  coarsen ──┼─→ solve on max(N) steps         │
│                  coarsen ──┴─→ ... down to min(N)            │
│                                      │                       │
│     K trajectories ─→ RMS ‖u_2N − u_N‖ ─→ log2 rates ─→ CSV  │
│                                                              │
└──────────────────────────────────────────────────────────────┘"""

EXIT_CONFIG_ERROR = 1
EXIT_NUMERICAL_ABORT = 2

console = Console()


def show_help_with_diagram(ctx: typer.Context, param: typer.CallbackParam, value: bool) -> None:
    """Show help with study diagram."""
    if value:
        typer.echo(ctx.get_help())
        console.print()
        console.print(STUDY_DIAGRAM, highlight=False)
        raise typer.Exit()


app = typer.Typer(
    name="fracheat",
    help="Convergence studies for the fractional stochastic heat equation.",
    add_completion=False,
)


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        typer.echo(f"fracheat {debug._get_version()}")
        raise typer.Exit()


def debug_callback(value: bool) -> None:
    """Print debug info and exit."""
    if value:
        debug._print_debug_info()
        raise typer.Exit()


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    version: Annotated[
        bool,
        typer.Option(
            "--version",
            "-V",
            callback=version_callback,
            is_eager=True,
            help="Show version.",
        ),
    ] = False,
    debug_info: Annotated[
        bool,
        typer.Option(
            "--debug-info",
            callback=debug_callback,
            is_eager=True,
            help="Print debug information.",
        ),
    ] = False,
    help_flag: Annotated[
        bool,
        typer.Option(
            "--help",
            "-h",
            callback=show_help_with_diagram,
            is_eager=True,
            help="Show this message and exit.",
        ),
    ] = False,
) -> None:
    """Fracheat - spectral-Galerkin SPDE convergence studies."""
    if ctx.invoked_subcommand is None:
        typer.echo(ctx.get_help())
        console.print()
        console.print(STUDY_DIAGRAM, highlight=False)
        raise typer.Exit()


def exit_codes(command: Callable[..., None]) -> Callable[..., None]:
    """Map configuration errors to exit code 1 and numerical aborts to exit code 2."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            command(*args, **kwargs)
        except ConfigError as error:
            print(f"\nConfiguration error: {error}", file=sys.stderr)
            raise typer.Exit(EXIT_CONFIG_ERROR) from error
        except NumericalBlowUpError as error:
            notes = "; ".join(getattr(error, "__notes__", []))
            print(f"\nNumerical abort: {error} ({notes})", file=sys.stderr)
            raise typer.Exit(EXIT_NUMERICAL_ABORT) from error

    return wrapper


# --- Shared options ---
ConfigOpt = Annotated[Optional[Path], typer.Option("--config", help="Flat 'key = value' study file")]
OutOpt = Annotated[Optional[Path], typer.Option("--out", "-o", help="Output file (default: stdout)")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Master seed (fallback: SPDE_SEED)")]
ThreadsOpt = Annotated[Optional[int], typer.Option("--threads", help="Worker threads (fallback: SPDE_THREADS)")]
TrajectoriesOpt = Annotated[Optional[int], typer.Option("--K", help="Number of trajectories")]
ModesOpt = Annotated[Optional[int], typer.Option("--M", help="Number of Galerkin modes")]
AlphaOpt = Annotated[Optional[float], typer.Option("--alpha", help="Fractional order in (0, 1)")]
RhoOpt = Annotated[Optional[float], typer.Option("--rho", help="Noise decay exponent")]
FinalTimeOpt = Annotated[Optional[float], typer.Option("--T", help="Final time")]
StepsOpt = Annotated[Optional[str], typer.Option("--N", help="Step counts, e.g. 2,4,8")]
SchemeOpt = Annotated[Optional[SchemeKind], typer.Option("--scheme", help="Time discretization")]
SigmaZeroOpt = Annotated[bool, typer.Option("--sigma-zero", help="Switch the noise off")]
FZeroOpt = Annotated[bool, typer.Option("--f-zero", help="Use f = 0 instead of sin")]
SetOpt = Annotated[Optional[list[str]], typer.Option("--set", help="Override any study key: KEY=VALUE")]
StrictOpt = Annotated[bool, typer.Option("--strict-theory", help="Fail when gamma <= 0 instead of warning")]
QuietOpt = Annotated[bool, typer.Option("--quiet", "-q", help="No progress output")]
AlphaListOpt = Annotated[Optional[list[float]], typer.Option("--alpha", help="Alpha column(s) to run")]


def study_overrides(
    *,
    settings: list[str] | None = None,
    alpha: float | None = None,
    rho: float | None = None,
    modes: int | None = None,
    final_time: float | None = None,
    steps: str | None = None,
    trajectories: int | None = None,
    seed: int | None = None,
    scheme: SchemeKind | None = None,
    sigma_zero: bool = False,
    f_zero: bool = False,
) -> dict[str, Any]:
    """Collect `--set` pairs and explicit flags; explicit flags win.

    Raises:
        ConfigError: On a `--set` item without `=`.
    """
    overrides: dict[str, Any] = {}
    for item in settings or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            msg = f"--set expects KEY=VALUE, got {item!r}"
            raise ConfigError(msg)
        overrides[key.strip()] = value.strip()
    flags = {
        "alpha": alpha,
        "rho": rho,
        "M": modes,
        "T": final_time,
        "N": steps,
        "K": trajectories,
        "seed": seed,
        "scheme": scheme,
        "sigma_zero": True if sigma_zero else None,
        "f_zero": True if f_zero else None,
    }
    overrides.update({key: value for key, value in flags.items() if value is not None})
    return overrides


def layered(env: Config, overrides: dict[str, Any], config_path: Path | None = None) -> dict[str, Any]:
    """Stack environment seed, config file and command-line overrides (later layers win).

    Keys are normalized to StudyConfig field names, so `K` and `trajectories`
    override each other.
    """
    layers: list[dict[str, Any]] = [{"seed": env.seed} if env.seed is not None else {}]
    if config_path is not None:
        layers.append(read_config_file(config_path))
    layers.append(overrides)
    mapping: dict[str, Any] = {}
    for layer in layers:
        for key, value in layer.items():
            mapping[FIELD_ALIASES.get(key, key)] = value
    return mapping


def preset_alphas(mapping: dict[str, Any], alphas: list[float] | None, default: tuple[float, ...]) -> list[float]:
    """Alpha columns of a preset: repeated `--alpha`, else a `--set alpha=...`, else the defaults.

    Removes `alpha` from `mapping`, since presets take it positionally.

    Raises:
        ConfigError: If a `--set alpha` value is not a number.
    """
    pinned = mapping.pop("alpha", None)
    if alphas:
        return list(alphas)
    if pinned is None:
        return list(default)
    try:
        return [float(pinned)]
    except ValueError as error:
        msg = f"Invalid value for 'alpha': {pinned!r}"
        raise ConfigError(msg) from error


def output_path(out: Path, env: Config) -> Path:
    """Resolve `out` against `SPDE_OUTPUT_DIR` and create its parent directory."""
    out = out if out.is_absolute() else env.output_dir / out
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def emit(text: str, out: Path | None, env: Config) -> None:
    """Write results to `out` (relative to `SPDE_OUTPUT_DIR`), or to stdout."""
    if out is None:
        typer.echo(text, nl=False)
        return
    out = output_path(out, env)
    out.write_text(text, encoding="utf-8")
    print_status(f"Results saved to: {out}")


def run_tables(studies: list[StudyConfig], threads: int | None, env: Config, *, quiet: bool, strict: bool) -> str:
    """Run studies in order and render them as one CSV."""
    workers = threads if threads is not None else env.threads
    tables: list[RateTable] = [
        run_study(study, workers, progress=not quiet, strict_theory=strict) for study in studies
    ]
    return render_tables(tables)


# --- Run Command ---
@app.command()
@exit_codes
def run(
    config_path: ConfigOpt = None,
    out: OutOpt = None,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    trajectories: TrajectoriesOpt = None,
    modes: ModesOpt = None,
    alpha: AlphaOpt = None,
    rho: RhoOpt = None,
    final_time: FinalTimeOpt = None,
    steps: StepsOpt = None,
    scheme: SchemeOpt = None,
    sigma_zero: SigmaZeroOpt = False,
    f_zero: FZeroOpt = False,
    settings: SetOpt = None,
    strict_theory: StrictOpt = False,
    quiet: QuietOpt = False,
) -> None:
    """Run one convergence study from a config file and/or flags."""
    env = Config.from_env()
    overrides = study_overrides(
        settings=settings,
        alpha=alpha,
        rho=rho,
        modes=modes,
        final_time=final_time,
        steps=steps,
        trajectories=trajectories,
        seed=seed,
        scheme=scheme,
        sigma_zero=sigma_zero,
        f_zero=f_zero,
    )
    study = StudyConfig.from_mapping(layered(env, overrides, config_path))
    emit(run_tables([study], threads, env, quiet=quiet, strict=strict_theory), out, env)


# --- Table 1 Command ---
@app.command()
@exit_codes
def table1(
    alphas: AlphaListOpt = None,
    out: OutOpt = None,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    trajectories: TrajectoriesOpt = None,
    modes: ModesOpt = None,
    rho: RhoOpt = None,
    final_time: FinalTimeOpt = None,
    steps: StepsOpt = None,
    scheme: SchemeOpt = None,
    settings: SetOpt = None,
    strict_theory: StrictOpt = False,
    quiet: QuietOpt = False,
) -> None:
    """Rate table for rho=0.2 and alpha in {0.4, 0.6, 0.8} (M=500, K=1000 unless overridden)."""
    env = Config.from_env()
    overrides = study_overrides(
        settings=settings,
        rho=rho,
        modes=modes,
        final_time=final_time,
        steps=steps,
        trajectories=trajectories,
        seed=seed,
        scheme=scheme,
    )
    mapping = layered(env, overrides)
    columns = preset_alphas(mapping, alphas, TABLE1_ALPHAS)
    studies = [table1_study(alpha, **mapping) for alpha in columns]
    emit(run_tables(studies, threads, env, quiet=quiet, strict=strict_theory), out, env)


# --- Figure 1 Command ---
@app.command()
@exit_codes
def fig1(
    alphas: AlphaListOpt = None,
    out: OutOpt = None,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    trajectories: TrajectoriesOpt = None,
    modes: ModesOpt = None,
    final_time: FinalTimeOpt = None,
    steps: StepsOpt = None,
    scheme: SchemeOpt = None,
    settings: SetOpt = None,
    strict_theory: StrictOpt = False,
    quiet: QuietOpt = False,
) -> None:
    """Smooth-noise convergence data (rho=1.2, T=0.5, M=100) for both schemes."""
    env = Config.from_env()
    overrides = study_overrides(
        settings=settings,
        modes=modes,
        final_time=final_time,
        steps=steps,
        trajectories=trajectories,
        seed=seed,
    )
    mapping = layered(env, overrides)
    columns = preset_alphas(mapping, alphas, FIG1_ALPHAS)
    set_scheme = mapping.pop("scheme", None)
    pinned = scheme if scheme is not None else set_scheme
    schemes = [pinned] if pinned is not None else [SchemeKind.MODIFIED, SchemeKind.BASELINE]
    studies = [fig1_study(kind, alpha, **mapping) for kind in schemes for alpha in columns]
    emit(run_tables(studies, threads, env, quiet=quiet, strict=strict_theory), out, env)


# --- Single Command ---
@app.command()
@exit_codes
def single(
    config_path: ConfigOpt = None,
    out: OutOpt = None,
    seed: SeedOpt = None,
    trajectory: Annotated[int, typer.Option("--trajectory", "-k", help="Trajectory index")] = 0,
    modes: ModesOpt = None,
    alpha: AlphaOpt = None,
    rho: RhoOpt = None,
    final_time: FinalTimeOpt = None,
    steps: StepsOpt = None,
    scheme: SchemeOpt = None,
    sigma_zero: SigmaZeroOpt = False,
    f_zero: FZeroOpt = False,
    settings: SetOpt = None,
    dump_ladder_path: Annotated[
        Optional[Path], typer.Option("--dump-ladder", help="Write the fine noise ladder (binary)")
    ] = None,
) -> None:
    """Integrate one seeded trajectory and dump the coefficients of u(T) as JSON."""
    env = Config.from_env()
    overrides = study_overrides(
        settings=settings,
        alpha=alpha,
        rho=rho,
        modes=modes,
        final_time=final_time,
        steps=steps,
        seed=seed,
        scheme=scheme,
        sigma_zero=sigma_zero,
        f_zero=f_zero,
    )
    study = StudyConfig.from_mapping(layered(env, overrides, config_path))
    if trajectory < 0:
        msg = f"--trajectory must be nonnegative, got {trajectory}"
        raise ConfigError(msg)

    n_steps = max(study.step_counts)
    u, fine_ladder = single_solution(study, trajectory, n_steps)
    if dump_ladder_path is not None:
        dump_ladder(dump_ladder_path, fine_ladder, study.seed)
        print_status(f"Ladder saved to: {dump_ladder_path}")

    result = {
        "scheme": str(study.scheme),
        "alpha": study.alpha,
        "rho": study.rho,
        "M": study.modes,
        "T": study.final_time,
        "N": n_steps,
        "seed": study.seed,
        "trajectory": trajectory,
        "sigma_zero": study.sigma_zero,
        "f_zero": study.f_zero,
        "l2_norm": sobolev_norm(u, 0.0, build_basis(study.modes)),
        "coefficients": u.coeffs.tolist(),
    }
    if out is None:
        typer.echo(dumps_json(result), nl=False)
        return
    out = output_path(out, env)
    write_json(out, result)
    print_status(f"Results saved to: {out}")


if __name__ == "__main__":
    app()
