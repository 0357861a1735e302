"""Tests for the CLI."""

from __future__ import annotations

import json
from typing import TYPE_CHECKING

import numpy as np
import pytest
from typer.testing import CliRunner

from fracheat import app
from fracheat._internal import debug
from fracheat.core import harness
from fracheat.core.harness import CSV_HEADER, StudyConfig, render_tables, run_study
from fracheat.core.schemes import NonlinearitySpec
from fracheat.utils.io import load_ladder

if TYPE_CHECKING:
    from pathlib import Path

runner = CliRunner()

TINY = ["--M", "8", "--K", "3", "--N", "2,4", "--quiet"]


def _csv(path: Path) -> list[list[str]]:
    return [line.split(",") for line in path.read_text(encoding="utf-8").splitlines()]


def _column(rows: list[list[str]], name: str) -> list[str]:
    index = CSV_HEADER.index(name)
    return [row[index] for row in rows[1:]]


def test_main_no_args() -> None:
    """CLI with no args shows help and the study diagram."""
    result = runner.invoke(app)
    assert result.exit_code == 0
    assert "Study Flow" in result.output


def test_show_help() -> None:
    """Show help."""
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    assert "fracheat" in result.output.lower()


def test_show_version() -> None:
    """Show version."""
    result = runner.invoke(app, ["-V"])
    assert result.exit_code == 0
    assert debug._get_version() in result.output


def test_show_debug_info() -> None:
    """Show debug information."""
    result = runner.invoke(app, ["--debug-info"])
    assert result.exit_code == 0
    output = result.output.lower()
    assert "python" in output
    assert "system" in output
    assert "pcg64" in output


def test_subcommands_exist() -> None:
    """All expected subcommands are registered."""
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    for cmd in ["run", "table1", "fig1", "single"]:
        assert cmd in result.output


def test_run_matches_harness(tmp_path: Path) -> None:
    """The CLI CSV is exactly what the harness renders, for any thread count."""
    out = tmp_path / "rates.csv"
    result = runner.invoke(app, ["run", *TINY, "--seed", "5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    study = StudyConfig(modes=8, trajectories=3, step_counts=(2, 4), seed=5)
    expected = render_tables([run_study(study, progress=False)])
    assert out.read_text(encoding="utf-8") == expected

    threaded = tmp_path / "threaded.csv"
    result = runner.invoke(app, ["run", *TINY, "--seed", "5", "--threads", "8", "--out", str(threaded)])
    assert result.exit_code == 0, result.output
    assert threaded.read_bytes() == out.read_bytes()


def test_run_layers_config_file_and_flags(tmp_path: Path) -> None:
    """Flags override the config file, which overrides defaults."""
    config = tmp_path / "study.cfg"
    config.write_text("alpha = 0.4\nM = 8\nK = 3\nN = 2,4\nseed = 1\nscheme = baseline\n", encoding="utf-8")
    out = tmp_path / "rates.csv"
    result = runner.invoke(app, ["run", "--config", str(config), "--K", "2", "--quiet", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = _csv(out)
    assert _column(rows, "K") == ["2", "2"]
    assert _column(rows, "scheme") == ["baseline", "baseline"]
    assert _column(rows, "alpha") == ["0.40000000000000002"] * 2
    assert _column(rows, "seed") == ["1", "1"]


def test_seed_from_environment(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    """SPDE_SEED is the fallback seed; --seed wins over it."""
    monkeypatch.setenv("SPDE_SEED", "11")
    out = tmp_path / "rates.csv"
    assert runner.invoke(app, ["run", *TINY, "--out", str(out)]).exit_code == 0
    assert _column(_csv(out), "seed") == ["11", "11"]
    assert runner.invoke(app, ["run", *TINY, "--seed", "12", "--out", str(out)]).exit_code == 0
    assert _column(_csv(out), "seed") == ["12", "12"]


def test_set_overrides(tmp_path: Path) -> None:
    """`--set KEY=VALUE` reaches any study field."""
    out = tmp_path / "rates.csv"
    args = ["run", "--set", "M=8", "--set", "K=2", "--set", "N=2,4", "--set", "T=0.1", "--quiet", "--out", str(out)]
    result = runner.invoke(app, args)
    assert result.exit_code == 0, result.output
    assert _column(_csv(out), "T") == ["0.10000000000000001"] * 2


@pytest.mark.parametrize(
    "args",
    [
        ["run", *TINY, "--N", "3,4"],
        ["run", *TINY, "--set", "oops"],
        ["run", *TINY, "--set", "beta=1"],
        ["run", *TINY, "--alpha", "0.1", "--rho", "0.1", "--strict-theory"],
        ["run", *TINY, "--threads", "0"],
        ["run", "--config", "does-not-exist.cfg"],
        ["single", "--M", "4", "--trajectory=-1"],
    ],
)
def test_configuration_errors_exit_1(args: list[str]) -> None:
    """Bad configuration exits with code 1."""
    result = runner.invoke(app, args)
    assert result.exit_code == 1
    assert "Configuration error" in result.output


def test_numerical_abort_exits_2(monkeypatch: pytest.MonkeyPatch) -> None:
    """A non-finite trajectory exits with code 2."""
    nan_spec = NonlinearitySpec(lambda v: np.full_like(v, np.nan), lambda v: np.full_like(v, np.nan))
    monkeypatch.setattr(harness, "SINE", nan_spec)
    result = runner.invoke(app, ["run", *TINY])
    assert result.exit_code == 2
    assert "Numerical abort" in result.output


def test_table1_columns(tmp_path: Path) -> None:
    """`table1` runs one block per alpha at rho = 0.2."""
    out = tmp_path / "table1.csv"
    result = runner.invoke(app, ["table1", *TINY, "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = _csv(out)
    assert len(rows) == 7
    alphas = ("0.40000000000000002", "0.59999999999999998", "0.80000000000000004")
    assert _column(rows, "alpha") == [alpha for alpha in alphas for _ in range(2)]
    assert set(_column(rows, "rho")) == {"0.20000000000000001"}

    result = runner.invoke(app, ["table1", *TINY, "--alpha", "0.6", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert len(_csv(out)) == 3


def test_fig1_runs_both_schemes(tmp_path: Path) -> None:
    """`fig1` compares the two schemes unless one is chosen."""
    out = tmp_path / "fig1.csv"
    result = runner.invoke(app, ["fig1", *TINY, "--alpha", "0.6", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = _csv(out)
    assert _column(rows, "scheme") == ["modified", "modified", "baseline", "baseline"]
    assert set(_column(rows, "rho")) == {"1.2"}
    assert set(_column(rows, "T")) == {"0.5"}

    result = runner.invoke(app, ["fig1", *TINY, "--alpha", "0.6", "--scheme", "baseline", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert _column(_csv(out), "scheme") == ["baseline", "baseline"]


def test_single_linear_noise_free() -> None:
    """With f = 0 and no noise, `u(T)` is the damped initial mode."""
    result = runner.invoke(app, ["single", "--M", "8", "--N", "2,4", "--sigma-zero", "--f-zero"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.stdout)
    assert (data["N"], data["M"], data["sigma_zero"], data["f_zero"]) == (4, 8, True, True)
    tau = data["T"] / data["N"]
    expected = np.zeros(8)
    expected[1] = (1 / np.sqrt(2)) / (1 + tau * (4 * np.pi**2) ** data["alpha"]) ** 4
    np.testing.assert_allclose(data["coefficients"], expected, atol=1e-12)
    assert data["l2_norm"] == pytest.approx(expected[1])


def test_single_dumps_ladder(tmp_path: Path) -> None:
    """`--dump-ladder` writes the fine ladder that drove the solution."""
    ladder_path = tmp_path / "ladder.bin"
    out = tmp_path / "single.json"
    args = ["single", "--M", "4", "--N", "2,4", "--seed", "7", "-k", "2", "--dump-ladder", str(ladder_path)]
    result = runner.invoke(app, [*args, "--out", str(out)])
    assert result.exit_code == 0, result.output
    ladder, seed = load_ladder(ladder_path)
    assert seed == 7
    assert ladder.increments.shape == (8, 4)
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["trajectory"] == 2
    assert data["scheme"] == "modified"


def test_relative_out_uses_output_dir(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    """Relative `--out` paths land under SPDE_OUTPUT_DIR."""
    monkeypatch.setenv("SPDE_OUTPUT_DIR", str(tmp_path / "results"))
    result = runner.invoke(app, ["run", *TINY, "--out", "study/rates.csv"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "results" / "study" / "rates.csv").read_text(encoding="utf-8").startswith("scheme,")


def test_bad_environment_does_not_break_version(monkeypatch: pytest.MonkeyPatch) -> None:
    """A malformed SPDE_THREADS only fails the commands that read it, with exit code 1."""
    monkeypatch.setenv("SPDE_THREADS", "abc")
    assert runner.invoke(app, ["--version"]).exit_code == 0
    assert runner.invoke(app, ["--help"]).exit_code == 0
    result = runner.invoke(app, ["run", *TINY])
    assert result.exit_code == 1
    assert "SPDE_THREADS" in result.output


def test_single_writes_json_file(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    """`single --out` writes the same JSON it prints, relative to SPDE_OUTPUT_DIR."""
    monkeypatch.setenv("SPDE_OUTPUT_DIR", str(tmp_path))
    args = ["single", "--M", "4", "--N", "2,4", "--seed", "3"]
    printed = runner.invoke(app, args)
    assert printed.exit_code == 0, printed.output
    written = runner.invoke(app, [*args, "--out", "runs/single.json"])
    assert written.exit_code == 0, written.output
    text = (tmp_path / "runs" / "single.json").read_text(encoding="utf-8")
    assert text == printed.stdout
    assert json.loads(text)["seed"] == 3


def test_fig1_defaults_to_one_alpha(tmp_path: Path) -> None:
    """Without --alpha the smooth-noise comparison runs alpha = 0.6 for both schemes."""
    out = tmp_path / "fig1.csv"
    result = runner.invoke(app, ["fig1", *TINY, "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = _csv(out)
    assert set(_column(rows, "alpha")) == {"0.59999999999999998"}
    assert _column(rows, "scheme") == ["modified", "modified", "baseline", "baseline"]
