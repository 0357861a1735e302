"""Progress display on stderr, so CSV and JSON on stdout stay clean."""

from __future__ import annotations

import sys
import time


class TrajectoryProgress:
    """Counts finished trajectories of a study and reports them on one stderr line."""

    def __init__(self, total: int, label: str, *, enabled: bool = True) -> None:
        """Initialize the counter.

        Args:
            total: Number of trajectories expected.
            label: Study description shown in front of the counter.
            enabled: Print nothing when False.
        """
        self.total = total
        self.label = label
        self.enabled = enabled
        self.done = 0
        self.started = time.perf_counter()

    @property
    def elapsed(self) -> float:
        """Seconds since the counter was created."""
        return time.perf_counter() - self.started

    def advance(self) -> None:
        """Record one finished trajectory."""
        self.done += 1
        if self.enabled:
            print_progress(self.done, self.total, self.label)

    def finish(self) -> float:
        """Close the progress line and return the wall time in seconds."""
        wall_time = self.elapsed
        if self.enabled:
            print_done(f"{self.label}: {self.done} trajectories in {wall_time:.1f}s")
        return wall_time


def print_progress(current: int, total: int, message: str = "Simulating") -> None:
    """Print progress indicator to stderr.

    Args:
        current: Current item number (1-indexed).
        total: Total number of items.
        message: Action description.
    """
    percentage = int((current / total) * 100) if total > 0 else 0
    print(
        f"\r[{current}/{total}] {message}... ({percentage}%)",
        end="",
        flush=True,
        file=sys.stderr,
    )


def print_done(message: str = "Done") -> None:
    """Print completion message.

    Args:
        message: Completion message.
    """
    print(f"\n{message}", file=sys.stderr)


def print_status(message: str) -> None:
    """Print a one-line status or warning message to stderr."""
    print(message, file=sys.stderr)
