"""Configuration management for fracheat."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Invalid study configuration, config file or environment variable."""


def parse_int(raw: str) -> int:
    """Parse a decimal integer (leading zeros allowed), else a `0x`/`0o`/`0b` literal.

    Raises:
        ValueError: If `raw` is neither.
    """
    raw = raw.strip()
    try:
        return int(raw, 10)
    except ValueError:
        return int(raw, 0)


def _env_int(name: str, default: int | None) -> int | None:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return parse_int(raw)
    except ValueError as error:
        msg = f"{name}={raw!r} is not an integer"
        raise ConfigError(msg) from error


@dataclass(frozen=True)
class Config:
    """Application configuration loaded from environment variables."""

    seed: int | None
    """Fallback master seed (`SPDE_SEED`) when neither flags nor files give one."""

    threads: int
    """Default worker threads for trajectory parallelism (`SPDE_THREADS`)."""

    output_dir: Path
    """Base directory of relative `--out` paths (`SPDE_OUTPUT_DIR`)."""

    @classmethod
    def from_env(cls) -> Config:
        """Load configuration from environment variables.

        Returns:
            Config instance with values from environment.

        Raises:
            ConfigError: If an integer variable cannot be parsed.
        """
        threads = _env_int("SPDE_THREADS", 1)
        if threads is None or threads < 1:
            msg = f"SPDE_THREADS must be a positive integer, got {threads}"
            raise ConfigError(msg)
        return cls(
            seed=_env_int("SPDE_SEED", None),
            threads=threads,
            output_dir=Path(os.getenv("SPDE_OUTPUT_DIR", ".")).expanduser(),
        )


def parse_config_text(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse flat `key = value` text; `#` starts a comment.

    Args:
        text: File contents.
        source: Name used in error messages.

    Returns:
        Mapping of keys to raw string values, in file order.

    Raises:
        ConfigError: On a line without `=`, an empty key or a repeated key.
    """
    entries: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            msg = f"{source}:{lineno}: expected 'key = value', got {raw_line.strip()!r}"
            raise ConfigError(msg)
        if key in entries:
            msg = f"{source}:{lineno}: duplicate key {key!r}"
            raise ConfigError(msg)
        entries[key] = value.strip()
    return entries


def read_config_file(path: Path | str) -> dict[str, str]:
    """Read a flat `key = value` study file.

    Raises:
        ConfigError: If the file is missing or malformed.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        msg = f"Cannot read config file {path}: {error.strerror or error}"
        raise ConfigError(msg) from error
    return parse_config_text(text, str(path))

