"""JSON, CSV and binary ladder I/O utilities."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from fracheat.core.noise import NoiseLadder

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

LADDER_HEADER = np.dtype(
    [("modes", "<u8"), ("n_fine", "<u8"), ("tau_fine", "<f8"), ("seed", "<u8")],
)


def write_json(path: Path | str, data: dict[str, Any], indent: int = 2) -> None:
    """Write data to JSON file.

    Args:
        path: Path to output file.
        data: Data to serialize.
        indent: JSON indentation level.
    """
    Path(path).write_text(dumps_json(data, indent), encoding="utf-8")


def dumps_json(data: dict[str, Any], indent: int = 2) -> str:
    """Serialize data the way `write_json` does."""
    return json.dumps(data, indent=indent, ensure_ascii=False) + "\n"


def format_float(value: float | None) -> str:
    """Format a float with 17 significant digits; `None` becomes an empty field."""
    if value is None:
        return ""
    return f"{value:.17g}"


def render_csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    """Render rows as CSV text with `\\n` line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def dump_ladder(path: Path | str, ladder: NoiseLadder, seed: int) -> None:
    """Write a ladder in the little-endian debug format.

    Layout: header `(u8 M, u8 n_fine, f8 tau_fine, u8 seed)` then the
    `(n_fine, M)` increments as row-major `<f8`.
    """
    header = np.array([(ladder.increments.shape[1], ladder.steps, ladder.tau, seed)], dtype=LADDER_HEADER)
    payload = np.ascontiguousarray(ladder.increments, dtype="<f8")
    Path(path).write_bytes(header.tobytes() + payload.tobytes())


def load_ladder(path: Path | str) -> tuple[NoiseLadder, int]:
    """Read a ladder written by `dump_ladder`.

    Returns:
        The ladder and the seed stored in its header.

    Raises:
        ValueError: If the payload size does not match the header.
    """
    raw = Path(path).read_bytes()
    header = np.frombuffer(raw, dtype=LADDER_HEADER, count=1)[0]
    modes, steps = int(header["modes"]), int(header["n_fine"])
    body = np.frombuffer(raw, dtype="<f8", offset=LADDER_HEADER.itemsize)
    if body.size != modes * steps:
        msg = f"Ladder file {path} holds {body.size} values, header says {steps} x {modes}"
        raise ValueError(msg)
    ladder = NoiseLadder(body.reshape(steps, modes).astype(np.float64), float(header["tau_fine"]))
    return ladder, int(header["seed"])
