"""Scattering data built from a normalized weight: the auxiliary operator
alpha, the functions D0/D1/psi1, their boundary values, the companion weight
extracted by radial extrapolation, and the singular-mass deficit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import CircleGrid
from .herglotz import HerglotzEvaluator, neville_extrapolate
from .weights import MatrixWeight, moment_zero

COND_CUTOFF = 1e8
FLAG_TOL = 1e-8
SNAP_ONE = 1e-12
PSD_CLAMP = 1e-10
LADDER_LO = 6
LADDER_HI = 20
LADDER_TAIL = 8


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _opnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2))


def _cond(a: np.ndarray) -> float:
    """||A^-1|| * max(1, ||A||): collapses to 1/sigma_min for small matrices,
    so it still flags scalar values shrinking to zero."""
    s = np.linalg.svd(a, compute_uv=False)
    smin = float(s.min())
    if smin == 0.0:
        return np.inf
    return max(1.0, float(s.max())) / smin


def _cond_batch(values: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(values, compute_uv=False)
    smin = s.min(axis=-1)
    smax = np.maximum(1.0, s.max(axis=-1))
    with np.errstate(divide="ignore"):
        out = np.where(smin > 0.0, smax / np.where(smin > 0.0, smin, 1.0), np.inf)
    return out


@dataclass(frozen=True)
class CompanionWeightResult:
    """Companion weight on a grid with per-node diagnostics.

    Nodes where the radial ladder failed carry singular_flags and hold the
    last finite PSD ladder iterate for reporting only; they are excluded
    from every norm and from the deficit sum.
    """

    w1: MatrixWeight
    singular_flags: np.ndarray
    deficit: float
    cond_profile: np.ndarray
    convergence_estimates: np.ndarray

    @property
    def grid(self) -> CircleGrid:
        return self.w1.grid

    @property
    def unflagged(self) -> np.ndarray:
        return ~self.singular_flags


@dataclass(frozen=True)
class DeBrangesSystem:
    """gg_star = circle mean of the weight, alpha = sqrt(I - gg_star^2), and
    the Herglotz evaluator of the weight; everything else is derived."""

    gg_star: np.ndarray
    alpha: np.ndarray
    psi0: HerglotzEvaluator
    weight: MatrixWeight
    cond_cutoff: float = COND_CUTOFF

    @property
    def dim(self) -> int:
        return self.gg_star.shape[0]

    def d0(self, z: complex) -> np.ndarray:
        return self.alpha + self.psi0.psi(z)

    def psi1(self, z: complex) -> np.ndarray:
        d = self.d0(z)
        cond = _cond(d)
        if cond > self.cond_cutoff:
            raise ValueError(f"D0 numerically singular at z = {z}")
        return self.alpha - np.linalg.inv(d)

    def identity_residual(self, z: complex) -> float:
        """Residual of (alpha+psi0)(alpha-psi1) = (alpha-psi1)(alpha+psi0) = I.

        Near-tautological for this psi1 construction; kept as conditioning
        surveillance.  The independent check lives in the model module.
        """
        left = self.alpha + self.psi0.psi(z)
        right = self.alpha - self.psi1(z)
        eye = np.eye(self.dim)
        return max(_opnorm(left @ right - eye), _opnorm(right @ left - eye))

    def d0_boundary(self, theta: float, side: str = "inner"):
        """Boundary value of D0 and its condition number at one angle."""
        value = self.alpha + self.psi0.boundary_profile(np.asarray(theta, float), side)
        return value, _cond(value)

    def d1_boundary(self, theta: float, side: str = "inner"):
        """-(D0 boundary)^-1 where the condition number permits, else None."""
        value, cond = self.d0_boundary(theta, side)
        if cond > self.cond_cutoff:
            return None, cond
        return -np.linalg.inv(value), cond

    def boundary_profile(self, grid: CircleGrid, side: str = "inner"):
        """D0 boundary values and condition numbers on all grid nodes."""
        base = self.psi0.ring_values(1.0, grid)
        if side == "outer":
            base = np.conj(np.swapaxes(base, -1, -2))
        values = self.alpha + base
        return values, _cond_batch(values)

    def _ladder_values(self, grid: CircleGrid) -> np.ndarray:
        """(1/2i)(psi1 - psi1*) on the radial ladder: shape (rungs, M, k, k)."""
        rungs = []
        eye = np.eye(self.dim)
        for j in range(LADDER_LO, LADDER_HI + 1):
            r = 1.0 - 2.0 ** (-j)
            d0 = self.alpha + self.psi0.ring_values(r, grid)
            try:
                d0inv = np.linalg.inv(d0)
            except np.linalg.LinAlgError:
                d0inv = np.linalg.pinv(d0)
            psi1 = self.alpha - d0inv
            rungs.append((psi1 - np.conj(np.swapaxes(psi1, -1, -2))) / 2j)
        return np.stack(rungs)

    def companion_weight(self, grid: CircleGrid) -> CompanionWeightResult:
        """Radial limit of (1/2i)(psi1 - psi1*) at each node.

        The geometric ladder r = 1 - 2^-j, j = 6..20 feeds divergence
        detection; the extrapolated value uses the deepest 8 rungs, which
        keeps the atom-free nodes accurate even next to singular support.
        """
        ladder = self._ladder_values(grid)
        flat = np.abs(ladder[1:] - ladder[:-1]).max(axis=(-1, -2))
        diverged = (flat[-1] > 1e-12) & (flat[-1] > flat[0])
        value, correction = neville_extrapolate(ladder[-LADDER_TAIL:])
        estimates = np.abs(correction).max(axis=(-1, -2))
        flags = diverged | (estimates > FLAG_TOL)

        value = _hermitize(value)
        lam, vec = np.linalg.eigh(value)
        # PSD failure beyond roundoff means the limit was not resolved: flag it
        flags = flags | (lam.min(axis=-1) < -PSD_CLAMP)
        lam = np.maximum(lam, 0.0)
        value = _hermitize(np.einsum("mij,mj,mkj->mik", vec, lam, np.conj(vec)))

        for node in np.nonzero(flags)[0]:
            value[node] = self._last_psd_iterate(ladder[:, node])

        w1 = MatrixWeight.from_samples(value, grid, schatten_p=self.weight.schatten_p)
        kept = np.where(flags, 0.0, np.einsum("mii->m", value).real)
        deficit = float(np.trace(self.gg_star).real - kept.sum() / grid.size)
        _, conds = self.boundary_profile(grid, "inner")
        return CompanionWeightResult(
            w1=w1,
            singular_flags=flags,
            deficit=deficit,
            cond_profile=conds,
            convergence_estimates=estimates,
        )

    @staticmethod
    def _last_psd_iterate(node_ladder: np.ndarray) -> np.ndarray:
        for j in range(node_ladder.shape[0] - 1, -1, -1):
            candidate = _hermitize(node_ladder[j])
            if not np.all(np.isfinite(candidate)):
                continue
            lam = np.linalg.eigvalsh(candidate)
            if lam.min() >= -PSD_CLAMP:
                lam_c, vec = np.linalg.eigh(candidate)
                return _hermitize((vec * np.maximum(lam_c, 0.0)) @ vec.conj().T)
        return np.zeros_like(node_ladder[0])

    def companion_weight_reconstructed(self, theta: float) -> np.ndarray:
        """(D0+)^-* w0 (D0+)^-1 at one angle: the independent route to w1."""
        value, cond = self.d0_boundary(theta, "inner")
        if cond > self.cond_cutoff:
            raise ValueError(f"D0 boundary numerically singular at theta = {theta}")
        inv = np.linalg.inv(value)
        w0v = self.weight.value_at(theta)
        return inv.conj().T @ w0v @ inv


def build_system(w0: MatrixWeight, cond_cutoff: float = COND_CUTOFF) -> DeBrangesSystem:
    """Assemble the scattering data for a normalized weight.

    Eigenvalues of gg_star within 1e-12 of 1 are snapped to 1 exactly so
    alpha vanishes cleanly in the saturated directions (scalar weights always
    saturate); eigenvalues of I - gg_star^2 are clamped to [0, 1].
    """
    gg = moment_zero(w0)
    lam, vec = np.linalg.eigh(gg)
    lam = np.where(np.abs(lam - 1.0) <= SNAP_ONE, 1.0, lam)
    gg = _hermitize((vec * lam) @ vec.conj().T)
    alpha_lam = np.sqrt(np.clip(1.0 - lam ** 2, 0.0, 1.0))
    alpha = _hermitize((vec * alpha_lam) @ vec.conj().T)
    return DeBrangesSystem(
        gg_star=gg,
        alpha=alpha,
        psi0=HerglotzEvaluator.from_weight(w0),
        weight=w0,
        cond_cutoff=cond_cutoff,
    )
