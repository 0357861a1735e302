"""Numerical core: spectral basis, exact noise, time-stepping schemes and the Monte Carlo harness."""

from __future__ import annotations

__all__: list[str] = []
