"""Utility modules for fracheat."""

from __future__ import annotations

from fracheat.utils.io import dump_ladder, dumps_json, load_ladder, render_csv, write_json

__all__: list[str] = [
    "dump_ladder",
    "dumps_json",
    "load_ladder",
    "render_csv",
    "write_json",
]
