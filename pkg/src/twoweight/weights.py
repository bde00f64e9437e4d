"""Matrix-valued weights on the circle.

Covers the weight data model (Fourier or sampled form), Schatten norms,
mean-norm normalization, the zeroth moment, the scalar weight transform
v -> normalize(1/v), and the dyadic Muckenhoupt diagnostic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .circle import CircleGrid, MatrixSampleField, circle_mean

HERMITIAN_TOL = 1e-10
PSD_CLAMP = 1e-10
VANISH_TOL = 1e-14


def _next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n - 1)).bit_length()


def _clean_psd_samples(values: np.ndarray) -> np.ndarray:
    """Validate Hermitian PSD samples, clamping roundoff-negative eigenvalues.

    Eigenvalues in [-1e-10, 0) are set to 0; anything more negative is a hard
    error, as is a Hermiticity defect above 1e-10.
    """
    values = np.asarray(values, dtype=complex)
    if values.ndim == 1:
        values = values[:, None, None]
    if values.ndim != 3 or values.shape[1] != values.shape[2]:
        raise ValueError("samples must have shape (M, k, k)")
    adjoint = np.conj(np.swapaxes(values, -1, -2))
    defect = np.abs(values - adjoint).max() if values.size else 0.0
    if defect > HERMITIAN_TOL:
        raise ValueError(f"samples must be Hermitian (defect {defect:.3e})")
    values = 0.5 * (values + adjoint)
    if values.shape[1] == 1:
        diag = values[:, 0, 0].real
        if diag.min(initial=0.0) < -PSD_CLAMP:
            raise ValueError("weight sample is not positive semidefinite")
        values[:, 0, 0] = np.maximum(diag, 0.0)
        return values
    lam, vec = np.linalg.eigh(values)
    if lam.min() < -PSD_CLAMP:
        raise ValueError(
            f"weight sample is not positive semidefinite (min eigenvalue {lam.min():.3e})"
        )
    if lam.min() < 0.0:
        lam = np.maximum(lam, 0.0)
        values = np.einsum("mij,mj,mkj->mik", vec, lam, np.conj(vec))
        values = 0.5 * (values + np.conj(np.swapaxes(values, -1, -2)))
    return values


@dataclass(frozen=True)
class MatrixWeight:
    """Hermitian PSD matrix weight, held as Fourier coefficients or samples.

    Fourier form stores orders n = 0..d only; negative orders are implied by
    the Hermitian symmetry W_hat(-n) = W_hat(n)*.  schatten_p is carried with
    the weight because normalization depends on it.
    """

    kind: str
    dim: int
    schatten_p: float = 1.0
    fourier: Optional[np.ndarray] = None
    grid: Optional[CircleGrid] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.schatten_p < 1:
            raise ValueError("Schatten index must satisfy p >= 1")
        if self.dim < 1:
            raise ValueError("weight dimension must be at least 1")
        if self.kind == "fourier":
            if self.fourier is None:
                raise ValueError("Fourier-form weight needs coefficients")
            coeffs = np.asarray(self.fourier, dtype=complex)
            if coeffs.ndim != 3 or coeffs.shape[1:] != (self.dim, self.dim):
                raise ValueError("Fourier data must have shape (d+1, k, k)")
            zero = coeffs[0]
            if np.abs(zero - zero.conj().T).max() > HERMITIAN_TOL:
                raise ValueError("zeroth Fourier coefficient must be Hermitian")
            coeffs = coeffs.copy()
            coeffs[0] = 0.5 * (zero + zero.conj().T)
            object.__setattr__(self, "fourier", coeffs)
            # synthesizing on the natural grid validates positivity up front
            self.samples_on(self.natural_grid())
        elif self.kind == "samples":
            if self.grid is None or self.values is None:
                raise ValueError("sampled weight needs a grid and values")
            cleaned = _clean_psd_samples(self.values)
            if cleaned.shape[0] != self.grid.size:
                raise ValueError("sample count must match the grid size")
            if cleaned.shape[1] != self.dim:
                raise ValueError("sample dimension must match the declared dim")
            object.__setattr__(self, "values", cleaned)
        else:
            raise ValueError("weight kind must be 'fourier' or 'samples'")

    @classmethod
    def from_fourier(cls, coeffs, schatten_p: float = 1.0) -> "MatrixWeight":
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None, None]
        return cls(kind="fourier", dim=coeffs.shape[1], schatten_p=schatten_p, fourier=coeffs)

    @classmethod
    def from_samples(cls, values, grid: Optional[CircleGrid] = None,
                     schatten_p: float = 1.0) -> "MatrixWeight":
        values = np.asarray(values, dtype=complex)
        if values.ndim == 1:
            values = values[:, None, None]
        if grid is None:
            grid = CircleGrid(values.shape[0])
        return cls(kind="samples", dim=values.shape[1], schatten_p=schatten_p,
                   grid=grid, values=values)

    @property
    def degree(self) -> int:
        """Trigonometric degree bound of the representation."""
        if self.kind == "fourier":
            return self.fourier.shape[0] - 1
        return self.grid.size // 2

    def natural_grid(self) -> CircleGrid:
        """Default realization grid: M >= max(64, 8(d+1)) keeps aliasing
        below the test tolerances."""
        if self.kind == "samples":
            return self.grid
        wanted = max(64, 8 * (self.degree + 1))
        return CircleGrid(_next_power_of_two(wanted))

    def samples_on(self, grid: CircleGrid) -> np.ndarray:
        """Realize the weight as (M, k, k) PSD samples on the given grid."""
        if self.kind == "samples":
            if grid.size == self.grid.size:
                return self.values.copy()
            if grid.size < self.grid.size:
                raise ValueError("cannot resample onto a coarser grid")
            series = np.fft.fftshift(np.fft.fft(self.values, axis=0), axes=0)
            series /= self.grid.size
            pad = (grid.size - self.grid.size) // 2
            widths = ((pad, pad), (0, 0), (0, 0))
            padded = np.pad(series, widths)
            upsampled = np.fft.ifft(np.fft.ifftshift(padded, axes=0), axis=0)
            return _clean_psd_samples(upsampled * grid.size)
        d = self.degree
        if grid.size < 2 * (d + 1):
            raise ValueError("grid too coarse for the weight degree")
        if d == 0:
            vals = np.broadcast_to(self.fourier[0], (grid.size, self.dim, self.dim))
            return _clean_psd_samples(np.array(vals))
        phases = np.exp(1j * np.outer(grid.nodes, np.arange(1, d + 1)))
        analytic = np.einsum("mn,nij->mij", phases, self.fourier[1:])
        vals = self.fourier[0][None] + analytic + np.conj(np.swapaxes(analytic, -1, -2))
        return _clean_psd_samples(vals)

    def field_on(self, grid: CircleGrid) -> MatrixSampleField:
        return MatrixSampleField(grid, self.samples_on(grid))

    def value_at(self, theta) -> np.ndarray:
        """Pointwise value: exact series in Fourier form, band-limited
        trigonometric interpolation in sampled form."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "fourier":
            coeffs = self.fourier
            d = self.degree
        else:
            m = self.grid.size
            spectrum = np.fft.fft(self.values, axis=0) / m
            coeffs = spectrum[: m // 2]
            d = coeffs.shape[0] - 1
        if d == 0:
            vals = np.broadcast_to(coeffs[0], theta.shape + coeffs.shape[1:]).copy()
        else:
            phases = np.exp(1j * theta[..., None] * np.arange(1, d + 1))
            analytic = np.einsum("...n,nab->...ab", phases, coeffs[1:])
            vals = coeffs[0] + analytic + np.conj(np.swapaxes(analytic, -1, -2))
        return 0.5 * (vals + np.conj(np.swapaxes(vals, -1, -2)))

    def scaled(self, factor: float) -> "MatrixWeight":
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        if self.kind == "fourier":
            return MatrixWeight(kind="fourier", dim=self.dim, schatten_p=self.schatten_p,
                                fourier=self.fourier * factor)
        return MatrixWeight(kind="samples", dim=self.dim, schatten_p=self.schatten_p,
                            grid=self.grid, values=self.values * factor)


def schatten_norm(a, p: float = 1.0) -> float:
    """(sum of singular values^p)^(1/p)."""
    if p < 1:
        raise ValueError("Schatten index must satisfy p >= 1")
    a = np.asarray(a, dtype=complex)
    if a.shape == (1, 1):
        return float(np.abs(a[0, 0]))
    s = np.linalg.svd(a, compute_uv=False)
    return float((s ** p).sum() ** (1.0 / p))


def _mean_schatten_norm(w: MatrixWeight, grid: Optional[CircleGrid] = None) -> float:
    grid = grid or w.natural_grid()
    samples = w.samples_on(grid)
    if w.dim == 1:
        return float(np.abs(samples[:, 0, 0]).mean())
    s = np.linalg.svd(samples, compute_uv=False)
    norms = (s ** w.schatten_p).sum(axis=1) ** (1.0 / w.schatten_p)
    return float(norms.mean())


def normalize(w: MatrixWeight) -> MatrixWeight:
    """Scale so the circle mean of the pointwise Schatten-p norm equals one."""
    mean_norm = _mean_schatten_norm(w)
    if mean_norm <= VANISH_TOL:
        raise ValueError("degenerate weight")
    return w.scaled(1.0 / mean_norm)


def moment_zero(w: MatrixWeight, grid: Optional[CircleGrid] = None) -> np.ndarray:
    """Circle mean of the weight: a Hermitian PSD contraction for normalized input."""
    grid = grid or w.natural_grid()
    mean = circle_mean(w.field_on(grid))
    mean = 0.5 * (mean + mean.conj().T)
    lam, vec = np.linalg.eigh(mean)
    if lam.max(initial=0.0) > 1.0 + 1e-6:
        raise ValueError("normalization violated")
    lam = np.clip(lam, 0.0, 1.0)
    out = (vec * lam) @ vec.conj().T
    return 0.5 * (out + out.conj().T)


def _as_scalar_samples(v, grid: Optional[CircleGrid]) -> tuple[np.ndarray, CircleGrid]:
    if isinstance(v, MatrixWeight):
        if v.dim != 1:
            raise ValueError("scalar transform requires a 1x1 weight")
        grid = grid or v.natural_grid()
        return v.samples_on(grid)[:, 0, 0].real.copy(), grid
    samples = np.asarray(v, dtype=float)
    if samples.ndim != 1:
        raise ValueError("scalar weight samples must be one-dimensional")
    if grid is None:
        grid = CircleGrid(samples.shape[0])
    elif grid.size != samples.shape[0]:
        raise ValueError("sample count must match the grid size")
    return samples.copy(), grid


def koosis_transform(v, direction: str = "forward", grid: Optional[CircleGrid] = None,
                     constant: Optional[float] = None, schatten_p: float = 1.0):
    """Scalar weight transform between v and normalize(1/v).

    forward: returns (normalize(1/v), c) with the normalization constant c.
    backward: returns (c / w, c), the pointwise inverse scaled back.
    Samples of +inf are legal in v (they map to zeros of 1/v).
    """
    samples, grid = _as_scalar_samples(v, grid)
    if np.any(samples <= VANISH_TOL):
        raise ValueError("weight vanishes on a grid point")
    if direction == "forward":
        with np.errstate(divide="ignore"):
            inverted = np.where(np.isinf(samples), 0.0, 1.0 / samples)
        mean_norm = float(np.abs(inverted).mean())
        if mean_norm <= VANISH_TOL:
            raise ValueError("degenerate weight")
        c = 1.0 / mean_norm
        w = MatrixWeight.from_samples(inverted * c, grid, schatten_p=schatten_p)
        return w, c
    if direction == "backward":
        if constant is None:
            raise ValueError("backward transform needs the normalization constant")
        return constant / samples, constant
    raise ValueError("direction must be 'forward' or 'backward'")


def muckenhoupt_sup(v, grid: Optional[CircleGrid] = None) -> float:
    """Dyadic two-sided average product sup over aligned blocks of 4..M nodes.

    Trapezoid averages on closed blocks; blocks with non-finite averages
    (the weight may be +inf at isolated nodes) are excluded from the sup.
    """
    samples, grid = _as_scalar_samples(v, grid)
    if np.any(samples <= VANISH_TOL):
        raise ValueError("weight vanishes on a grid point")
    m = grid.size
    ext = np.concatenate([samples, samples[:1]])
    bad = ~np.isfinite(ext)
    vz = np.where(bad, 0.0, ext)
    inv = np.where(bad, 0.0, 1.0 / ext)
    cs_v = np.concatenate([[0.0], np.cumsum(vz)])
    cs_i = np.concatenate([[0.0], np.cumsum(inv)])
    cs_bad = np.concatenate([[0], np.cumsum(bad)])
    best = -np.inf
    j = 2
    while (1 << j) <= m:
        width = 1 << j
        a = np.arange(0, m, width)
        b = a + width
        blocked = (cs_bad[b + 1] - cs_bad[a]) > 0
        avg_v = (cs_v[b + 1] - cs_v[a] - 0.5 * (vz[a] + vz[b])) / width
        avg_i = (cs_i[b + 1] - cs_i[a] - 0.5 * (inv[a] + inv[b])) / width
        prod = avg_v * avg_i
        prod[blocked] = np.nan
        finite = prod[np.isfinite(prod)]
        if finite.size:
            best = max(best, float(finite.max()))
        j += 1
    if not np.isfinite(best):
        raise ValueError("no dyadic block with finite averages")
    return best


FIXTURE_NAMES = ("W_CONST", "W_COS", "W_DIAG", "W_RANK1")


def fixture(name: str) -> MatrixWeight:
    """Canonical normalized test weights used across the suite."""
    if name == "W_CONST":
        return MatrixWeight.from_fourier(np.array([1.0])[:, None, None])
    if name == "W_COS":
        return MatrixWeight.from_fourier(np.array([1.0, 0.5])[:, None, None])
    if name == "W_DIAG":
        coeffs = np.zeros((1, 2, 2), dtype=complex)
        coeffs[0] = np.diag([0.6, 0.8])
        return MatrixWeight.from_fourier(coeffs, schatten_p=2.0)
    if name == "W_RANK1":
        coeffs = np.zeros((2, 2, 2), dtype=complex)
        coeffs[0] = np.diag([1.0, 0.0])
        coeffs[1] = np.diag([0.5, 0.0])
        return MatrixWeight.from_fourier(coeffs)
    raise ValueError(f"unknown fixture {name!r}")


def fixtures() -> dict:
    return {name: fixture(name) for name in FIXTURE_NAMES}


def random_polynomial_weight(rng: np.random.Generator, dim: int,
                             half_degree: int = 2, schatten_p: float = 1.0) -> MatrixWeight:
    """Random normalized weight Q(theta)* Q(theta) of degree <= 2*half_degree.

    PSD by construction; the Fourier coefficients of Q*Q are assembled
    directly so the weight stays in exact Fourier form.
    """
    q = rng.standard_normal((half_degree + 1, dim, dim)) \
        + 1j * rng.standard_normal((half_degree + 1, dim, dim))
    coeffs = np.zeros((2 * half_degree + 1, dim, dim), dtype=complex)
    for m in range(2 * half_degree + 1):
        for n in range(0, half_degree + 1 - m):
            coeffs[m] += q[n].conj().T @ q[n + m]
    w = MatrixWeight.from_fourier(coeffs, schatten_p=schatten_p)
    return normalize(w)


def weight_spec_document(w: MatrixWeight) -> dict:
    """The JSON-serializable weight spec document."""
    doc: dict = {"dim": w.dim, "schatten_p": w.schatten_p, "kind": w.kind}
    if w.kind == "fourier":
        doc["data"] = [
            {"n": n, "real": w.fourier[n].real.tolist(), "imag": w.fourier[n].imag.tolist()}
            for n in range(w.fourier.shape[0])
        ]
    else:
        doc["data"] = [
            {"real": sample.real.tolist(), "imag": sample.imag.tolist()}
            for sample in w.values
        ]
    return doc


def save_weight_spec(w: MatrixWeight, path) -> None:
    """Write the structured-text weight spec (JSON)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(weight_spec_document(w), fh, indent=1)
        fh.write("\n")


def _matrix_from_entry(entry: dict, dim: int, what: str) -> np.ndarray:
    real = np.asarray(entry.get("real"), dtype=float)
    imag_raw = entry.get("imag")
    imag = np.zeros_like(real) if imag_raw is None else np.asarray(imag_raw, dtype=float)
    if real.shape != (dim, dim) or imag.shape != (dim, dim):
        raise ValueError(f"{what} must be a {dim}x{dim} real/imag matrix pair")
    return real + 1j * imag


def load_weight_spec(path) -> MatrixWeight:
    """Read and validate a weight spec; raises ValueError on malformed input."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"weight spec is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("weight spec must be a JSON object")
    try:
        dim = int(doc["dim"])
        kind = doc["kind"]
        data = doc["data"]
    except KeyError as exc:
        raise ValueError(f"weight spec missing field {exc}") from exc
    schatten_p = float(doc.get("schatten_p", 1.0))
    if not isinstance(data, list) or not data:
        raise ValueError("weight spec data must be a non-empty list")
    if kind == "fourier":
        orders = []
        for entry in data:
            if "n" not in entry:
                raise ValueError("Fourier entries need an order field 'n'")
            orders.append(int(entry["n"]))
        if min(orders) < 0:
            raise ValueError("Fourier entries carry n >= 0 only")
        coeffs = np.zeros((max(orders) + 1, dim, dim), dtype=complex)
        for order, entry in zip(orders, data):
            coeffs[order] = _matrix_from_entry(entry, dim, f"coefficient n={order}")
        return MatrixWeight.from_fourier(coeffs, schatten_p=schatten_p)
    if kind == "samples":
        stack = np.stack([
            _matrix_from_entry(entry, dim, f"sample {i}") for i, entry in enumerate(data)
        ])
        return MatrixWeight.from_samples(stack, schatten_p=schatten_p)
    raise ValueError("weight spec kind must be 'fourier' or 'samples'")
