"""Sine eigenbasis of the Dirichlet Laplacian on (0, 1) and spectral fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import ArrayLike, NDArray

SQRT2 = np.sqrt(2.0)


def _frozen(values: ArrayLike) -> NDArray[np.float64]:
    array = np.array(values, dtype=np.float64)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class EigenBasis:
    """Truncated eigenbasis `phi_i(x) = sqrt(2) sin(i pi x)` with collocation data."""

    modes: int
    """Number of retained modes M."""

    grid_size: int
    """Number of interior collocation nodes G."""

    lambdas: NDArray[np.float64] = field(repr=False)
    """Eigenvalues `pi^2 i^2`, i = 1..M."""

    nodes: NDArray[np.float64] = field(repr=False)
    """Collocation nodes `g / (G + 1)`, g = 1..G."""

    sine_matrix: NDArray[np.float64] = field(repr=False)
    """G x M matrix of `sqrt(2) sin(i pi x_g)`."""

    @property
    def weight(self) -> float:
        """Quadrature weight `1 / (G + 1)` of the discrete sine transform."""
        return 1.0 / (self.grid_size + 1)

    def powers(self, exponent: float) -> NDArray[np.float64]:
        """Return `lambda_i ** exponent` for every retained mode."""
        return self.lambdas**exponent


@dataclass(frozen=True)
class SpectralField:
    """A function on (0, 1) stored as its Galerkin coefficients `<u, phi_i>`."""

    coeffs: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))
        if self.coeffs.ndim != 1:
            msg = f"Spectral coefficients must be a vector, got shape {self.coeffs.shape}"
            raise ValueError(msg)

    @property
    def modes(self) -> int:
        """Number of coefficients."""
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, modes: int) -> SpectralField:
        """Zero field with `modes` coefficients."""
        return cls(np.zeros(modes))

    @classmethod
    def unit(cls, modes: int, index: int) -> SpectralField:
        """Unit field `e_index` (1-based mode index)."""
        if not 1 <= index <= modes:
            msg = f"Mode index {index} outside 1..{modes}"
            raise ValueError(msg)
        coeffs = np.zeros(modes)
        coeffs[index - 1] = 1.0
        return cls(coeffs)

    def _check(self, other: SpectralField) -> None:
        if other.modes != self.modes:
            msg = f"Dimension mismatch: {self.modes} vs {other.modes} modes"
            raise ValueError(msg)

    def __add__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField(self.coeffs - other.coeffs)


def build_basis(modes: int, grid_size: int | None = None) -> EigenBasis:
    """Build the Dirichlet sine eigenbasis on the unit interval.

    Args:
        modes: Number of retained modes M.
        grid_size: Collocation nodes G (default `2M + 1`, the smallest grid on
            which products of two retained modes are integrated exactly).

    Returns:
        The eigenbasis with eigenvalues `pi^2 i^2` and its sine matrix.

    Raises:
        ValueError: If `modes < 1` or `grid_size < 2 * modes + 1`.
    """
    if modes < 1:
        msg = f"Need at least one mode, got M={modes}"
        raise ValueError(msg)
    if grid_size is None:
        grid_size = 2 * modes + 1
    if grid_size < 2 * modes + 1:
        msg = f"Grid of G={grid_size} nodes aliases products of M={modes} modes (need G >= {2 * modes + 1})"
        raise ValueError(msg)

    index = np.arange(1, modes + 1, dtype=np.float64)
    nodes = np.arange(1, grid_size + 1, dtype=np.float64) / (grid_size + 1)
    return EigenBasis(
        modes=modes,
        grid_size=grid_size,
        lambdas=_frozen(np.pi**2 * index**2),
        nodes=_frozen(nodes),
        sine_matrix=_frozen(SQRT2 * np.sin(np.pi * np.outer(nodes, index))),
    )


def eigenvalue_lower_bound(basis: EigenBasis) -> NDArray[np.float64]:
    """Return the d=1 lower bound `pi^2 i^2 / 3` for each retained eigenvalue."""
    index = np.arange(1, basis.modes + 1, dtype=np.float64)
    return np.pi**2 * index**2 / 3.0


def to_physical(u: SpectralField, basis: EigenBasis) -> NDArray[np.float64]:
    """Evaluate a spectral field on the collocation nodes.

    Raises:
        ValueError: On a mode count that does not match the basis.
    """
    if u.modes != basis.modes:
        msg = f"Field has {u.modes} modes, basis has {basis.modes}"
        raise ValueError(msg)
    return basis.sine_matrix @ u.coeffs


def to_spectral(values: ArrayLike, basis: EigenBasis) -> SpectralField:
    """Project nodal values onto the retained modes by discrete sine quadrature.

    Raises:
        ValueError: If `values` does not have one entry per collocation node.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (basis.grid_size,):
        msg = f"Expected {basis.grid_size} nodal values, got shape {values.shape}"
        raise ValueError(msg)
    return SpectralField(basis.weight * (basis.sine_matrix.T @ values))


def project(func: Callable[[NDArray[np.float64]], ArrayLike], basis: EigenBasis) -> SpectralField:
    """Project a vectorized function of `x` onto the basis."""
    return to_spectral(func(basis.nodes), basis)


def scale_by_spectrum(
    u: SpectralField,
    g: Callable[[NDArray[np.float64]], ArrayLike],
    basis: EigenBasis,
) -> SpectralField:
    """Apply the diagonal operator `g(A)` mode by mode.

    `g` receives the eigenvalue vector, so `lambda lam: lam**alpha` is `A^alpha`,
    `lambda lam: np.exp(-lam**alpha * t)` the semigroup and
    `lambda lam: 1 / (1 + tau * lam**alpha)` the implicit Euler resolvent.

    Raises:
        ValueError: On a mode count that does not match the basis.
    """
    if u.modes != basis.modes:
        msg = f"Field has {u.modes} modes, basis has {basis.modes}"
        raise ValueError(msg)
    factors = np.broadcast_to(np.asarray(g(basis.lambdas), dtype=np.float64), (basis.modes,))
    return SpectralField(factors * u.coeffs)


def sobolev_norm(u: SpectralField, nu: float, basis: EigenBasis) -> float:
    """Return `(sum_i lambda_i^nu <u, phi_i>^2) ** 0.5`; `nu=0` is the L2 norm."""
    if u.modes != basis.modes:
        msg = f"Field has {u.modes} modes, basis has {basis.modes}"
        raise ValueError(msg)
    return float(np.sqrt(np.sum(basis.powers(nu) * u.coeffs**2)))
