"""Two-phase region segmentation as a residual problem.

The image is split by the sign of the composite level set phi into an inside
and an outside region, each scored against its mean intensity.  The energy

    E(alpha) = sum_obs (u - u_in)^2 H_eps(phi) + (u - u_ex)^2 (1 - H_eps(phi))

is written as ||G||^2 with G the stacked vector

    [ sqrt(r_in H_eps(phi)) ; sqrt(r_ex (1 - H_eps(phi))) ] * sqrt(pixel area)

over observed pixels only, so missing pixels never enter the fit.  The
Jacobian is supported on the narrow band |phi| < eps, which keeps the
linearized solves cheap on large grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Grid, RegionMask, ScalarField, mask_from_positive_support
from .knolls import ShapeDictionary, delta_eps, heaviside_eps

__all__ = [
    "Image",
    "RegionStats",
    "SegmentationProblem",
    "update_stats",
    "random_pm1_init",
]

_H_GUARD = 1e-12  # clamp under the square root at narrow-band edges


@dataclass(frozen=True)
class Image:
    """Intensity field with an observation mask (True = pixel available)."""

    grid: Grid
    pixels: ScalarField
    observed: RegionMask | None = None

    def __post_init__(self) -> None:
        if self.pixels.grid != self.grid:
            raise ValueError("pixel field grid does not match image grid")
        if self.observed is None:
            full = RegionMask(self.grid, np.ones(self.grid.shape, dtype=bool))
            object.__setattr__(self, "observed", full)
        elif self.observed.grid != self.grid:
            raise ValueError("observation mask grid does not match image grid")
        if not self.observed.values.any():
            raise ValueError("observed set empty")
        obs_vals = self.pixels.values[self.observed.values]
        if not np.isfinite(obs_vals).all():
            raise ValueError("observed pixels must be finite")


@dataclass(frozen=True)
class RegionStats:
    """Mean intensities of the inside and outside regions."""

    u_in: float
    u_ex: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.u_in) and np.isfinite(self.u_ex)):
            raise ValueError("region statistics must be finite")


def _initial_stats(u: np.ndarray) -> RegionStats:
    # crude two-level split around the observed mean; the solver callback
    # refines these every stats_update_period iterations
    mid = float(u.mean())
    hi = u[u >= mid]
    lo = u[u < mid]
    u_in = float(hi.mean()) if hi.size else mid
    u_ex = float(lo.mean()) if lo.size else mid
    return RegionStats(u_in, u_ex)


class SegmentationProblem:
    """ResidualProblem over knoll coefficients for one masked image.

    Mutable only through set_stats; everything else is fixed at
    construction.  The per-alpha linearization (narrow band, Jacobian
    factors, band-restricted knoll matrix) is cached for the repeated
    jac_apply/jac_adjoint calls of the inner Lasso solver.
    """

    def __init__(
        self,
        image: Image,
        dictionary: ShapeDictionary,
        eps: float = 0.05,
        stats: RegionStats | None = None,
        stats_update_period: int = 1,
    ):
        if image.grid != dictionary.grid:
            raise ValueError("image and dictionary grids differ")
        if eps <= 0:
            raise ValueError("eps must be positive")
        if stats_update_period < 1:
            raise ValueError("stats_update_period must be >= 1")
        self.image = image
        self.dictionary = dictionary
        self.eps = float(eps)
        self.stats_update_period = int(stats_update_period)

        self._obs = np.flatnonzero(image.observed.values.ravel())
        self._u = image.pixels.values.ravel()[self._obs].astype(float)
        self._sqrt_area = float(np.sqrt(dictionary.grid.pixel_area))
        self._psi_obs = dictionary.field_matrix[:, self._obs]
        self.stats = stats if stats is not None else _initial_stats(self._u)
        self._stats_rev = 0
        self._lin_cache: tuple | None = None

    @property
    def dim(self) -> int:
        return len(self.dictionary)

    @property
    def n_observed(self) -> int:
        return self._obs.size

    def set_stats(self, stats: RegionStats) -> None:
        self.stats = stats
        self._stats_rev += 1
        self._lin_cache = None

    def _check(self, alpha: np.ndarray) -> np.ndarray:
        return self.dictionary.check_coefficients(alpha)

    def level_set_observed(self, alpha: np.ndarray) -> np.ndarray:
        alpha = self._check(alpha)
        return alpha @ self._psi_obs - self.dictionary.c

    def level_set(self, alpha: np.ndarray) -> ScalarField:
        from .knolls import assemble_level_set

        return assemble_level_set(self.dictionary, alpha)

    def segmentation_mask(self, alpha: np.ndarray) -> RegionMask:
        return mask_from_positive_support(self.level_set(alpha))

    def residual(self, alpha: np.ndarray) -> np.ndarray:
        phi = self.level_set_observed(alpha)
        H = heaviside_eps(phi, self.eps)
        r_in = (self._u - self.stats.u_in) ** 2
        r_ex = (self._u - self.stats.u_ex) ** 2
        g_in = np.sqrt(r_in * H) * self._sqrt_area
        g_ex = np.sqrt(r_ex * (1.0 - H)) * self._sqrt_area
        return np.concatenate([g_in, g_ex])

    def energy(self, alpha: np.ndarray) -> float:
        r = self.residual(alpha)
        return float(np.dot(r, r))

    def _linearization(self, alpha: np.ndarray):
        alpha = self._check(alpha)
        key = (alpha.tobytes(), self._stats_rev)
        if self._lin_cache is not None and self._lin_cache[0] == key:
            return self._lin_cache[1]
        phi = alpha @ self._psi_obs - self.dictionary.c
        band = np.flatnonzero(np.abs(phi) < self.eps)
        phi_b = phi[band]
        H = heaviside_eps(phi_b, self.eps)
        dlt = delta_eps(phi_b, self.eps)
        u_b = self._u[band]
        r_in = (u_b - self.stats.u_in) ** 2
        r_ex = (u_b - self.stats.u_ex) ** 2
        half = 0.5 * self._sqrt_area * dlt
        f_in = half * np.sqrt(r_in / np.maximum(H, _H_GUARD))
        f_ex = -half * np.sqrt(r_ex / np.maximum(1.0 - H, _H_GUARD))
        psi_band = np.ascontiguousarray(self._psi_obs[:, band])
        lin = (band, f_in, f_ex, psi_band)
        self._lin_cache = (key, lin)
        return lin

    def jac_apply(self, alpha: np.ndarray, eta: np.ndarray) -> np.ndarray:
        band, f_in, f_ex, psi_band = self._linearization(alpha)
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.dim,):
            raise ValueError("eta length does not match dictionary")
        out = np.zeros(2 * self.n_observed)
        if band.size:
            t = eta @ psi_band
            out[band] = f_in * t
            out[self.n_observed + band] = f_ex * t
        return out

    def jac_adjoint(self, alpha: np.ndarray, s: np.ndarray) -> np.ndarray:
        band, f_in, f_ex, psi_band = self._linearization(alpha)
        s = np.asarray(s, dtype=float)
        if s.shape != (2 * self.n_observed,):
            raise ValueError("s is not dimensioned like a residual")
        if not band.size:
            return np.zeros(self.dim)
        s_in = s[:self.n_observed][band]
        s_ex = s[self.n_observed:][band]
        return psi_band @ (f_in * s_in + f_ex * s_ex)

    def inner(self, s1: np.ndarray, s2: np.ndarray) -> float:
        return float(np.dot(s1, s2))

    def active_columns(self, alpha: np.ndarray) -> np.ndarray:
        """Indices of knolls whose support meets the narrow band |phi| < eps."""
        alpha = self._check(alpha)
        phi = alpha @ self.dictionary.field_matrix - self.dictionary.c
        band = np.abs(phi) < self.eps
        if not band.any():
            return np.zeros(0, dtype=int)
        hits = (self.dictionary.field_matrix[:, band] > 0).any(axis=1)
        return np.flatnonzero(hits)

    def stats_callback(self):
        """Solver callback refreshing region means every update period."""

        def cb(iteration: int, alpha: np.ndarray) -> None:
            if iteration % self.stats_update_period == 0:
                self.set_stats(update_stats(self, alpha))

        return cb


def update_stats(problem: SegmentationProblem, alpha: np.ndarray) -> RegionStats:
    """H-weighted mean intensities over observed pixels.

    A region whose total weight vanishes keeps its previous mean.
    """
    phi = problem.level_set_observed(alpha)
    H = heaviside_eps(phi, problem.eps)
    u = problem._u
    w_in = float(H.sum())
    w_ex = float((1.0 - H).sum())
    u_in = float(np.dot(u, H) / w_in) if w_in > 0.0 else problem.stats.u_in
    u_ex = float(np.dot(u, 1.0 - H) / w_ex) if w_ex > 0.0 else problem.stats.u_ex
    return RegionStats(u_in, u_ex)


def random_pm1_init(n_d: int, count: int | None = None, rng=None) -> np.ndarray:
    """Coefficients with +-1 on a random knoll subset, zero elsewhere.

    count defaults to 10% of the dictionary (at least one knoll).
    """
    if n_d < 1:
        raise ValueError("dictionary size must be positive")
    if count is None:
        count = max(1, round(0.1 * n_d))
    if not 1 <= count <= n_d:
        raise ValueError("count must lie in [1, n_d]")
    gen = np.random.default_rng(rng)
    alpha = np.zeros(n_d)
    idx = gen.choice(n_d, size=count, replace=False)
    alpha[idx] = gen.integers(0, 2, size=count) * 2.0 - 1.0
    return alpha
