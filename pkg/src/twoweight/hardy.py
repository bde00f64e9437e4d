"""Rational test class, weighted Hardy projections, the multipliers X and
Y+/Y-, the weighted Hilbert transform, and Galerkin operator-norm bounds."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circle import CircleGrid, TWO_PI
from .debranges import CompanionWeightResult, DeBrangesSystem, _cond
from .herglotz import pair_kernel_quadrature
from .weights import MatrixWeight

DELTA_POLE = 1e-3
RICHARDSON_WEIGHTS = (8.0 / 3.0, -2.0, 1.0 / 3.0)


def _next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n - 1)).bit_length()


@dataclass(frozen=True)
class RationalTestFunction:
    """f(mu) = sum (mu - z_i)^-1 chi_i with poles off the unit circle."""

    poles: np.ndarray
    coefficients: np.ndarray
    delta_pole: float = DELTA_POLE

    def __post_init__(self) -> None:
        poles = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None] if poles.size == coeffs.size else coeffs[None, :]
        if coeffs.ndim != 2 or coeffs.shape[0] != poles.size:
            raise ValueError("coefficients must have shape (terms, k)")
        if self.delta_pole <= 0:
            raise ValueError("pole standoff must be positive")
        gap = np.abs(1.0 - np.abs(poles))
        if poles.size and gap.min() < self.delta_pole:
            raise ValueError("pole too close to the unit circle")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def dim(self) -> int:
        return self.coefficients.shape[1]

    @property
    def standoff(self) -> float:
        if self.poles.size == 0:
            return 1.0
        return float(np.abs(1.0 - np.abs(self.poles)).min())

    def __call__(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=complex)
        kernel = 1.0 / (mu[..., None] - self.poles)
        return np.einsum("...t,tk->...k", kernel, self.coefficients)

    def evaluate_on(self, grid: CircleGrid) -> np.ndarray:
        return self(grid.points)

    def __add__(self, other: "RationalTestFunction") -> "RationalTestFunction":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return RationalTestFunction(
            poles=np.concatenate([self.poles, other.poles]),
            coefficients=np.vstack([self.coefficients, other.coefficients]),
            delta_pole=min(self.delta_pole, other.delta_pole),
        )

    def __rmul__(self, scalar: complex) -> "RationalTestFunction":
        return RationalTestFunction(self.poles, scalar * self.coefficients,
                                    self.delta_pole)

    def to_dict(self) -> dict:
        return {
            "poles": [[z.real, z.imag] for z in self.poles],
            "coefficients": [[[c.real, c.imag] for c in row]
                             for row in self.coefficients],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RationalTestFunction":
        poles = np.array([complex(re, im) for re, im in doc["poles"]])
        coeffs = np.array([[complex(re, im) for re, im in row]
                           for row in doc["coefficients"]])
        return cls(poles=poles, coefficients=coeffs)


def random_test_functions(rng: np.random.Generator, count: int, dim: int,
                          max_terms: int = 5,
                          standoff_range=(1e-2, 0.9),
                          sides=(-1.0, 1.0)) -> list:
    """Seeded corpus: pole standoff log-uniform in the given range on both
    sides of the circle, angles uniform, coefficients complex Gaussian."""
    lo, hi = standoff_range
    out = []
    for _ in range(count):
        terms = int(rng.integers(1, max_terms + 1))
        gap = np.exp(rng.uniform(np.log(lo), np.log(hi), size=terms))
        side = rng.choice(np.asarray(sides), size=terms)
        radius = 1.0 + side * gap
        angle = rng.uniform(0.0, TWO_PI, size=terms)
        poles = radius * np.exp(1j * angle)
        coeffs = rng.standard_normal((terms, dim)) + 1j * rng.standard_normal((terms, dim))
        out.append(RationalTestFunction(poles=poles, coefficients=coeffs))
    return out


def save_corpus(functions: Sequence[RationalTestFunction], path,
                seed: Optional[int] = None) -> None:
    doc = {"seed": seed, "functions": [f.to_dict() for f in functions]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_corpus(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    functions = [RationalTestFunction.from_dict(d) for d in doc["functions"]]
    return functions, doc.get("seed")


def _clearance_grid(standoff: float, base: Optional[CircleGrid]) -> CircleGrid:
    need = int(np.ceil(8.0 / standoff))
    if base is not None:
        if base.size < need:
            raise ValueError("pole too close to the circle for this grid")
        return base
    return CircleGrid(max(64, _next_power_of_two(need)))


def weighted_inner(f: RationalTestFunction, g: RationalTestFunction,
                   w: MatrixWeight, grid: Optional[CircleGrid] = None) -> complex:
    """(1/M) sum_m (w(theta_m) f(e^{i theta_m}), g(e^{i theta_m})).

    The grid must resolve the poles: M >= 8/standoff.
    """
    standoff = min(f.standoff, g.standoff)
    if grid is None:
        grid = _clearance_grid(standoff, None)
        grid = CircleGrid(max(grid.size, w.natural_grid().size))
    else:
        _clearance_grid(standoff, grid)
    samples = w.samples_on(grid)
    fv = f.evaluate_on(grid)
    gv = g.evaluate_on(grid)
    return complex(np.einsum("mk,mkl,ml->", np.conj(gv), samples, fv) / grid.size)


def _field_gram(fields: np.ndarray, w_samples: np.ndarray,
                mask: Optional[np.ndarray], size: int) -> np.ndarray:
    if mask is not None:
        fields = np.where(mask[:, None, None], fields, 0.0)
    gram = np.einsum("mik,mkl,mjl->ij", np.conj(fields), w_samples, fields) / size
    return 0.5 * (gram + gram.conj().T)


def _field_norm2(fields: np.ndarray, w_samples: np.ndarray,
                 mask: Optional[np.ndarray], size: int) -> np.ndarray:
    if mask is not None:
        fields = np.where(mask[:, None, None], fields, 0.0)
    vals = np.einsum("mbk,mkl,mbl->b", np.conj(fields), w_samples, fields) / size
    return vals.real


@dataclass(frozen=True)
class GramData:
    basis: tuple
    gram0: np.ndarray
    gram1: np.ndarray


def gram_norm_estimate(gram1: np.ndarray, gram0: np.ndarray) -> float:
    """Largest generalized eigenvalue of (gram1, gram0) on the numerical
    range of gram0 (rank cut at 1e-10 of the top eigenvalue)."""
    lam, vec = np.linalg.eigh(gram0)
    lmax = float(lam.max(initial=0.0))
    if not np.isfinite(lmax) or lmax <= 0.0:
        raise ValueError("Gram matrix numerically zero")
    keep = lam > 1e-10 * lmax
    if not np.any(keep):
        raise ValueError("Gram matrix numerically zero")
    basis_w = vec[:, keep] / np.sqrt(lam[keep])
    compressed = basis_w.conj().T @ gram1 @ basis_w
    compressed = 0.5 * (compressed + compressed.conj().T)
    return float(np.linalg.eigvalsh(compressed).max())


class HardyOperators:
    """Grid realization of X, Y+/-, the projections, and the Hilbert transform
    for one system; boundary data and the companion weight are precomputed."""

    def __init__(self, system: DeBrangesSystem, grid: CircleGrid,
                 companion: Optional[CompanionWeightResult] = None):
        self.system = system
        self.grid = grid
        self.companion = companion or system.companion_weight(grid)
        if self.companion.grid.size != grid.size:
            raise ValueError("companion weight lives on a different grid")
        self.w0_samples = system.weight.samples_on(grid)
        self.w1_samples = self.companion.w1.values
        inner, _ = system.boundary_profile(grid, "inner")
        self.d0_inner = inner
        self.d0_outer = np.conj(np.swapaxes(inner, -1, -2))
        self.unflagged = self.companion.unflagged

    @classmethod
    def build(cls, system: DeBrangesSystem, size: Optional[int] = None,
              grid: Optional[CircleGrid] = None) -> "HardyOperators":
        if grid is None:
            grid = CircleGrid(size) if size else system.weight.natural_grid()
        return cls(system, grid)

    # -- pointwise operators --------------------------------------------

    def apply_x(self, f: RationalTestFunction) -> RationalTestFunction:
        """Same poles, coefficients rotated by D0 at each pole."""
        rotated = np.empty_like(f.coefficients)
        for i, z in enumerate(f.poles):
            d = self.system.d0(complex(z))
            if _cond(d) > self.system.cond_cutoff:
                raise ValueError(f"D0 numerically singular at pole z = {z}")
            rotated[i] = d @ f.coefficients[i]
        return RationalTestFunction(f.poles.copy(), rotated, f.delta_pole)

    def apply_y(self, f: RationalTestFunction, side: str = "+") -> np.ndarray:
        """D0^{+-}(theta) f(e^{i theta}) at grid nodes; flagged rows zeroed."""
        mult = self.d0_inner if side == "+" else self.d0_outer
        field = np.einsum("mkl,ml->mk", mult, f.evaluate_on(self.grid))
        return np.where(self.unflagged[:, None], field, 0.0)

    def project(self, f: RationalTestFunction, side: str = "+") -> np.ndarray:
        """+-(i/2)((Xf)(theta) - (Y_+- f)(theta)); flagged rows zeroed."""
        sign = 1.0 if side == "+" else -1.0
        xf = self.apply_x(f).evaluate_on(self.grid)
        mult = self.d0_inner if side == "+" else self.d0_outer
        yf = np.einsum("mkl,ml->mk", mult, f.evaluate_on(self.grid))
        out = sign * 0.5j * (xf - yf)
        return np.where(self.unflagged[:, None], out, 0.0)

    def hilbert(self, f: RationalTestFunction) -> np.ndarray:
        """-i(P+ - P-)f + i * mean(w0 f); flagged rows zeroed."""
        plus = self.project(f, "+")
        minus = self.project(f, "-")
        w0f = np.einsum("mkl,ml->mk", self.w0_samples, f.evaluate_on(self.grid))
        mean = w0f.mean(axis=0)
        out = -1j * (plus - minus) + 1j * mean
        return np.where(self.unflagged[:, None], out, 0.0)

    def multiplication_residual(self, f: RationalTestFunction) -> float:
        """max over unflagged nodes of ||(P+ f + P- f)(theta) - w0(theta) f||."""
        total = self.project(f, "+") + self.project(f, "-")
        w0f = np.einsum("mkl,ml->mk", self.w0_samples, f.evaluate_on(self.grid))
        diff = np.linalg.norm(total - w0f, axis=1)
        return float(diff[self.unflagged].max())

    # -- quadrature cross-check routes -----------------------------------

    def project_quadrature(self, f: RationalTestFunction, side: str = "+",
                           offset: float = 10.0, oversample: int = 8,
                           richardson: bool = True) -> np.ndarray:
        """Direct quadrature of the defining limit, anchored at r = 1 -+ 10/M.

        The integral at fixed radius is evaluated spectrally on an oversampled
        grid; three radii (eps, 2 eps, 4 eps) are combined by Richardson
        extrapolation to reach the limit at second order or better.
        """
        m = self.grid.size
        fine = CircleGrid(oversample * m)
        w0_fine = self.system.weight.samples_on(fine)
        gv = np.einsum("mkl,ml->mk", w0_fine, f.evaluate_on(fine))
        ghat = np.fft.fft(gv, axis=0) / fine.size
        modes = np.fft.fftfreq(fine.size, 1.0 / fine.size).astype(int)
        eps0 = offset / m
        radii = [eps0, 2 * eps0, 4 * eps0] if richardson else [eps0]
        weights = RICHARDSON_WEIGHTS if richardson else (1.0,)
        acc = np.zeros((fine.size, f.dim), dtype=complex)
        for eps, cw in zip(radii, weights):
            if side == "+":
                damp = np.where(modes >= 0, (1.0 - eps) ** np.maximum(modes, 0), 0.0)
            else:
                damp = np.where(modes < 0, (1.0 + eps) ** np.minimum(modes, 0), 0.0)
            acc += cw * np.fft.ifft(ghat * damp[:, None], axis=0) * fine.size
        return acc[::oversample]

    def hilbert_quadrature(self, f: RationalTestFunction, offset: float = 10.0,
                           oversample: int = 8, richardson: bool = True) -> np.ndarray:
        """Convolution against the kernel 2 sin(theta-t)/(1+r^2-2r cos(theta-t))
        at r = 1 - 10/M (optionally Richardson-extrapolated over r)."""
        m = self.grid.size
        fine = CircleGrid(oversample * m)
        w0_fine = self.system.weight.samples_on(fine)
        gv = np.einsum("mkl,ml->mk", w0_fine, f.evaluate_on(fine))
        eps0 = offset / m
        radii = [eps0, 2 * eps0, 4 * eps0] if richardson else [eps0]
        weights = RICHARDSON_WEIGHTS if richardson else (1.0,)
        acc = np.zeros((m, f.dim), dtype=complex)
        block = max(1, (1 << 22) // fine.size)
        for start in range(0, m, block):
            lag = self.grid.nodes[start:start + block, None] - fine.nodes[None, :]
            sin_lag = np.sin(lag)
            cos_lag = np.cos(lag)
            for eps, cw in zip(radii, weights):
                r = 1.0 - eps
                kernel = 2.0 * sin_lag / (1.0 + r * r - 2.0 * r * cos_lag)
                acc[start:start + block] += cw * (kernel @ gv) / fine.size
        return acc

    # -- bilinear identities ---------------------------------------------

    def gram_identity_residual(self, z1: complex, z2: complex) -> float:
        """Residual of the two-point Gram identity: the w0-side quadrature of
        1/((e^{-it} - conj(z2))(e^{it} - z1)) against the psi1-side expression
        D0(z2)* (psi1(z1) - psi1(z2)*) / (2i (1 - z1 conj(z2))) D0(z1)."""
        z1 = complex(z1)
        z2 = complex(z2)
        denom = 1.0 - z1 * np.conj(z2)
        if abs(denom) < 1e-12:
            raise ValueError("pair lies on the reflection locus z1 conj(z2) = 1")
        qgrid = CircleGrid(max(1024, self.grid.size))
        field = self.system.weight.field_on(qgrid)
        lhs = pair_kernel_quadrature(z1, z2, field)
        p1 = self.system.psi1(z1)
        p2 = self.system.psi1(z2)
        core = (p1 - p2.conj().T) / (2j * denom)
        rhs = self.system.d0(z2).conj().T @ core @ self.system.d0(z1)
        return float(np.linalg.norm(lhs - rhs, 2))

    def x_gram_residual(self, basis: Sequence[RationalTestFunction]) -> np.ndarray:
        """gram0 - gram1 for the operator X; zero when nu1 is purely a.c."""
        data = self.gram_data("X", basis)
        return data.gram0 - data.gram1

    # -- Galerkin norm estimation -----------------------------------------

    def _image_fields(self, op: str, basis: Sequence[RationalTestFunction]) -> np.ndarray:
        images = []
        for f in basis:
            if op == "X":
                images.append(self.apply_x(f).evaluate_on(self.grid))
            elif op in ("Y+", "Y-"):
                images.append(self.apply_y(f, op[1]))
            elif op in ("P+", "P-"):
                images.append(self.project(f, op[1]))
            elif op == "H":
                images.append(self.hilbert(f))
            elif op in ("mult", "mult-by-w0"):
                images.append(np.einsum("mkl,ml->mk",
                                        self.w0_samples, f.evaluate_on(self.grid)))
            else:
                raise ValueError(f"unknown operator {op!r}")
        return np.stack(images, axis=1)

    def gram_data(self, op: str, basis: Sequence[RationalTestFunction]) -> GramData:
        """Source Gram in L2(w0) and image Gram in L2(w1), both restricted to
        unflagged nodes so the isometries close exactly on the grid."""
        for f in basis:
            _clearance_grid(f.standoff, self.grid)
        sources = np.stack([f.evaluate_on(self.grid) for f in basis], axis=1)
        m = self.grid.size
        gram0 = _field_gram(sources, self.w0_samples, self.unflagged, m)
        images = self._image_fields(op, basis)
        gram1 = _field_gram(images, self.w1_samples, self.unflagged, m)
        return GramData(basis=tuple(basis), gram0=gram0, gram1=gram1)

    def norm_estimate(self, op: str, basis: Sequence[RationalTestFunction]) -> float:
        """Lower bound for the squared operator norm on span(basis)."""
        data = self.gram_data(op, basis)
        return gram_norm_estimate(data.gram1, data.gram0)

    def contraction_ratios(self, functions: Sequence[RationalTestFunction],
                           side: str = "+") -> np.ndarray:
        """||P f||^2_{L2(w1), unflagged} / ||f||^2_{L2(w0)} per test function."""
        sources = np.stack([f.evaluate_on(self.grid) for f in functions], axis=1)
        images = np.stack([self.project(f, side) for f in functions], axis=1)
        m = self.grid.size
        num = _field_norm2(images, self.w1_samples, self.unflagged, m)
        den = _field_norm2(sources, self.w0_samples, None, m)
        return num / den


# -- module-level convenience wrappers ------------------------------------

def hardy_projection(f: RationalTestFunction, side: str,
                     system: DeBrangesSystem, grid: Optional[CircleGrid] = None,
                     method: str = "identity") -> np.ndarray:
    ops = HardyOperators.build(system, grid=grid)
    if method == "identity":
        return ops.project(f, side)
    if method == "quadrature":
        return ops.project_quadrature(f, side)
    raise ValueError("method must be 'identity' or 'quadrature'")


def apply_X(f: RationalTestFunction, system: DeBrangesSystem) -> RationalTestFunction:
    rotated = np.empty_like(f.coefficients)
    for i, z in enumerate(f.poles):
        d = system.d0(complex(z))
        if _cond(d) > system.cond_cutoff:
            raise ValueError(f"D0 numerically singular at pole z = {z}")
        rotated[i] = d @ f.coefficients[i]
    return RationalTestFunction(f.poles.copy(), rotated, f.delta_pole)


def apply_Y(f: RationalTestFunction, side: str, system: DeBrangesSystem,
            grid: Optional[CircleGrid] = None) -> np.ndarray:
    return HardyOperators.build(system, grid=grid).apply_y(f, side)


def hilbert_transform(f: RationalTestFunction, system: DeBrangesSystem,
                      grid: Optional[CircleGrid] = None) -> np.ndarray:
    return HardyOperators.build(system, grid=grid).hilbert(f)


def multiplication_residual(f: RationalTestFunction, system: DeBrangesSystem,
                            grid: Optional[CircleGrid] = None) -> float:
    return HardyOperators.build(system, grid=grid).multiplication_residual(f)


def gram_identity_residual(z1: complex, z2: complex, system: DeBrangesSystem,
                           grid: Optional[CircleGrid] = None) -> float:
    return HardyOperators.build(system, grid=grid).gram_identity_residual(z1, z2)


def norm_estimate(op: str, basis: Sequence[RationalTestFunction],
                  system: DeBrangesSystem,
                  grid: Optional[CircleGrid] = None) -> float:
    return HardyOperators.build(system, grid=grid).norm_estimate(op, basis)
