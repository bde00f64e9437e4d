"""Herglotz (Cauchy) transforms of matrix weights: interior values, radial
boundary limits, and the jump recovering the weight."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .circle import CircleGrid, MatrixSampleField
from .weights import MatrixWeight

DELTA_MIN = 1e-8
TRIM_TOL = 1e-14


@dataclass(frozen=True)
class RadialLimit:
    """Extrapolated radial limit with a convergence estimate.

    converged is False when successive ladder differences grow, which tags
    a possible singular-support angle rather than raising.
    """

    value: np.ndarray
    estimate: float
    converged: bool


def neville_extrapolate(vals: np.ndarray, ratio: float = 2.0):
    """Iterated Richardson elimination for samples at step sizes h0 * ratio^-j.

    vals has the ladder along axis 0; trailing axes are carried through.
    Returns (limit, last_correction); the correction is the change made by
    the final elimination step and serves as the convergence estimate.
    """
    table = np.asarray(vals, dtype=complex)
    rungs = table.shape[0]
    if rungs == 1:
        return table[0], np.full_like(table[0], np.inf)
    prev_best = table[-1]
    for level in range(1, rungs):
        factor = ratio ** level
        table = table[1:] + (table[1:] - table[:-1]) / (factor - 1.0)
        if table.shape[0] > 1:
            prev_best = table[-1]
    value = table[0]
    return value, value - prev_best


def radial_limit(fn: Callable[[float], np.ndarray], side: str = "inner",
                 j_lo: int = 6, j_hi: int = 14,
                 tail: Optional[int] = None) -> RadialLimit:
    """Radial limit of fn(r) as r -> 1 from inside (r = 1 - 2^-j) or outside.

    Richardson extrapolation on the geometric ladder j = j_lo..j_hi; if
    `tail` is given only the last `tail` rungs enter the extrapolation while
    the full ladder still feeds divergence detection.
    """
    if side not in ("inner", "outer"):
        raise ValueError("side must be 'inner' or 'outer'")
    sign = -1.0 if side == "inner" else 1.0
    js = np.arange(j_lo, j_hi + 1)
    radii = 1.0 + sign * 2.0 ** (-js.astype(float))
    vals = np.stack([np.asarray(fn(r), dtype=complex) for r in radii])
    flat = vals.reshape(vals.shape[0], -1)
    diffs = np.abs(flat[1:] - flat[:-1]).max(axis=1)
    diverged = bool(diffs.size and diffs[-1] > 1e-12 and diffs[-1] > diffs[0])
    used = vals if tail is None else vals[-tail:]
    value, correction = neville_extrapolate(used)
    estimate = float(np.abs(correction).max())
    return RadialLimit(value=value, estimate=estimate, converged=not diverged)


@dataclass(frozen=True)
class HerglotzEvaluator:
    """psi(z) = i * integral (e^it + z)/(e^it - z) w(e^it) dt/2pi from the
    Fourier data of w.  coeffs holds orders 0..N; negative orders are implied
    by Hermitian symmetry."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
            raise ValueError("coefficients must have shape (N+1, k, k)")
        zero = coeffs[0]
        if np.abs(zero - zero.conj().T).max() > 1e-10:
            raise ValueError("zeroth coefficient must be Hermitian")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_weight(cls, w: MatrixWeight) -> "HerglotzEvaluator":
        if w.kind == "fourier":
            return cls(coeffs=w.fourier)
        m = w.grid.size
        spectrum = np.fft.fft(w.values, axis=0) / m
        coeffs = spectrum[: m // 2]
        # trim trailing negligible orders so band-limited data stays compact
        mags = np.abs(coeffs).max(axis=(1, 2))
        scale = mags.max()
        keep = m // 2
        while keep > 1 and mags[keep - 1] <= TRIM_TOL * scale:
            keep -= 1
        return cls(coeffs=coeffs[:keep])

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def _adjoint_coeffs(self) -> np.ndarray:
        return np.conj(np.swapaxes(self.coeffs, -1, -2))

    def series_inside(self, zs: np.ndarray) -> np.ndarray:
        """i [W(0) + 2 sum_{n>=1} W(n) z^n] for points strictly inside."""
        zs = np.asarray(zs, dtype=complex)
        d = self.degree
        if d == 0:
            tail = np.zeros(zs.shape + self.coeffs.shape[1:], dtype=complex)
        else:
            powers = zs[..., None] ** np.arange(1, d + 1)
            tail = np.einsum("...n,nab->...ab", powers, self.coeffs[1:])
        return 1j * (self.coeffs[0] + 2.0 * tail)

    def series_outside(self, zs: np.ndarray) -> np.ndarray:
        """-i [W(0) + 2 sum_{n>=1} W(n)* z^-n] for points strictly outside."""
        zs = np.asarray(zs, dtype=complex)
        adj = self._adjoint_coeffs()
        d = self.degree
        if d == 0:
            tail = np.zeros(zs.shape + adj.shape[1:], dtype=complex)
        else:
            powers = (1.0 / zs)[..., None] ** np.arange(1, d + 1)
            tail = np.einsum("...n,nab->...ab", powers, adj[1:])
        return -1j * (adj[0] + 2.0 * tail)

    def psi(self, z: complex) -> np.ndarray:
        z = complex(z)
        if abs(1.0 - abs(z)) < DELTA_MIN:
            raise ValueError("z too close to the circle; use boundary operations")
        if abs(z) < 1.0:
            return self.series_inside(np.array(z, dtype=complex))
        return self.series_outside(np.array(z, dtype=complex))

    def boundary(self, theta, side: str = "inner",
                 method: str = "exact") -> RadialLimit:
        """Radial boundary value of psi at e^{i theta}.

        The evaluator always holds a finite coefficient list, so the inner
        limit is the exact finite sum i[W(0) + 2 sum W(n) e^{i n theta}] and
        the outer limit its adjoint; the Richardson ladder over
        r = 1 -+ 2^-j, j = 6..14 is kept as a cross-checking mode.
        """
        if side not in ("inner", "outer"):
            raise ValueError("side must be 'inner' or 'outer'")
        if method == "exact":
            value = self.boundary_profile(np.asarray(theta, dtype=float), side)
            return RadialLimit(value=value, estimate=0.0, converged=True)
        if method == "ladder":
            theta = float(theta)
            point = np.exp(1j * theta)
            if side == "inner":
                return radial_limit(lambda r: self.series_inside(np.array(r * point)),
                                    side="inner")
            return radial_limit(lambda r: self.series_outside(np.array(r * point)),
                                side="outer")
        raise ValueError("method must be 'exact' or 'ladder'")

    def boundary_profile(self, theta: np.ndarray, side: str = "inner") -> np.ndarray:
        """Exact boundary values, vectorized over angles."""
        theta = np.asarray(theta, dtype=float)
        d = self.degree
        if d == 0:
            inner = np.broadcast_to(1j * self.coeffs[0],
                                    theta.shape + self.coeffs.shape[1:]).copy()
        else:
            phases = np.exp(1j * theta[..., None] * np.arange(1, d + 1))
            tail = np.einsum("...n,nab->...ab", phases, self.coeffs[1:])
            inner = 1j * (self.coeffs[0] + 2.0 * tail)
        if side == "inner":
            return inner
        return np.conj(np.swapaxes(inner, -1, -2))

    def jump(self, theta) -> np.ndarray:
        """(1/2i)(psi_inner - psi_outer) at e^{i theta}: recovers the density."""
        theta = np.asarray(theta, dtype=float)
        plus = self.boundary_profile(theta, "inner")
        minus = self.boundary_profile(theta, "outer")
        return (plus - minus) / 2j

    def ring_values(self, r: float, grid: CircleGrid) -> np.ndarray:
        """psi(r e^{i theta_m}) on all grid nodes at once via an inverse FFT.

        r < 1 uses the interior series, r > 1 the exterior one; r = 1 gives
        the exact inner boundary profile.  Equivalent to the pointwise series
        but O(M log M) in the grid size.
        """
        if r < 0:
            raise ValueError("radius must be nonnegative")
        m = grid.size
        d = self.degree
        if d >= m:
            raise ValueError("grid too coarse for ring synthesis")
        k = self.dim
        spec = np.zeros((m, k, k), dtype=complex)
        if r <= 1.0:
            spec[0] = self.coeffs[0]
            if d >= 1:
                damping = r ** np.arange(1.0, d + 1.0)
                spec[1:d + 1] = 2.0 * self.coeffs[1:] * damping[:, None, None]
            return 1j * np.fft.ifft(spec, axis=0) * m
        adj = self._adjoint_coeffs()
        spec[0] = adj[0]
        if d >= 1:
            damping = (1.0 / r) ** np.arange(1.0, d + 1.0)
            spec[m - d:] = (2.0 * adj[1:] * damping[:, None, None])[::-1]
        return -1j * np.fft.ifft(spec, axis=0) * m


def psi_quadrature(z: complex, field: MatrixSampleField) -> np.ndarray:
    """Trapezoid quadrature of the Herglotz integral; the slow cross-check."""
    z = complex(z)
    mu = field.grid.points
    kernel = (mu + z) / (mu - z)
    return 1j * np.einsum("m,mab->ab", kernel, field.values) / field.grid.size


def pair_kernel_quadrature(z1: complex, z2: complex,
                           field: MatrixSampleField) -> np.ndarray:
    """Quadrature of integral dnu / ((e^{-it} - conj(z2)) (e^{it} - z1))."""
    mu = field.grid.points
    kernel = 1.0 / ((np.conj(mu) - np.conj(z2)) * (mu - z1))
    return np.einsum("m,mab->ab", kernel, field.values) / field.grid.size
