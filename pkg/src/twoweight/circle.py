"""Uniform circle grids, matrix-valued Fourier analysis, and the Poisson kernel."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CircleGrid:
    """Uniform angular grid theta_m = 2*pi*m/M.

    M must be a power of two and at least 16; this keeps the FFT exact-size
    and the trapezoid rule spectrally accurate for band-limited fields.
    """

    size: int

    def __post_init__(self) -> None:
        size = int(self.size)
        if size != self.size:
            raise ValueError("grid size must be an integer")
        if size < 16 or not _is_power_of_two(size):
            raise ValueError("grid size must be a power of two, at least 16")
        object.__setattr__(self, "size", size)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Angles theta_m in [0, 2*pi), strictly increasing."""
        return TWO_PI * np.arange(self.size) / self.size

    @cached_property
    def points(self) -> np.ndarray:
        """Unit-circle samples e^{i theta_m}."""
        return np.exp(1j * self.nodes)

    def node_index(self, theta: float) -> int:
        """Index of the grid node nearest to theta (mod 2*pi)."""
        m = int(np.rint(theta * self.size / TWO_PI)) % self.size
        return m


@dataclass(frozen=True)
class MatrixSampleField:
    """Per-node k x k complex matrices over a grid."""

    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(np.asarray(self.values, dtype=complex))
        if values.ndim == 1:
            values = values[:, None, None]
        if values.ndim != 3 or values.shape[1] != values.shape[2]:
            raise ValueError("values must have shape (M, k, k)")
        if values.shape[0] != self.grid.size:
            raise ValueError("sample count must match the grid size")
        if values.shape[1] < 1:
            raise ValueError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(values)):
            raise ValueError("all samples must be finite")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def poisson_kernel(r: float, theta):
    """(1 - r^2) / (1 + r^2 - 2 r cos(theta)).

    Defined for r in [0, 1) and r > 1 (negative there); r = 1 is a domain
    error because the kernel degenerates to a distribution on the circle.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if r == 1:
        raise ValueError("Poisson kernel is undefined at r = 1")
    theta = np.asarray(theta, dtype=float)
    out = (1.0 - r * r) / (1.0 + r * r - 2.0 * r * np.cos(theta))
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class FourierSeries:
    """Matrix Fourier coefficients indexed by order n = -M/2 .. M/2 - 1."""

    orders: np.ndarray
    coeffs: np.ndarray

    def coefficient(self, n: int) -> np.ndarray:
        """Coefficient of order n; zero matrix for orders outside the range."""
        lo = int(self.orders[0])
        hi = int(self.orders[-1])
        if n < lo or n > hi:
            k = self.coeffs.shape[1]
            return np.zeros((k, k), dtype=complex)
        return self.coeffs[n - lo]

    def synthesize(self, grid: CircleGrid) -> MatrixSampleField:
        """Inverse transform back onto a grid of the same size."""
        if grid.size != self.coeffs.shape[0]:
            raise ValueError("synthesis grid must match the transform size")
        spectrum = np.fft.ifftshift(self.coeffs, axes=0)
        values = np.fft.ifft(spectrum, axis=0) * grid.size
        return MatrixSampleField(grid, values)


def fourier_coefficients(field: MatrixSampleField) -> FourierSeries:
    """W_hat(n) = (1/M) sum_m field(theta_m) e^{-i n theta_m}, n = -M/2 .. M/2-1."""
    m = field.grid.size
    coeffs = np.fft.fftshift(np.fft.fft(field.values, axis=0), axes=0) / m
    orders = np.arange(-(m // 2), m // 2)
    return FourierSeries(orders=orders, coeffs=coeffs)


def circle_mean(field: MatrixSampleField) -> np.ndarray:
    """(1/M) sum_m field(theta_m): the trapezoid rule for the circle mean."""
    return field.values.mean(axis=0)
