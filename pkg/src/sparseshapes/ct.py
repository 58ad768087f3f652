"""Parallel-beam X-ray CT as a residual problem.

Rays are grouped by projection angle; for angle theta the detector axis is
(cos theta, sin theta) and rays travel along (-sin theta, cos theta) at
offsets centered on the detector.  Exact ray-pixel intersection lengths are
assembled once per (geometry, grid) pair into a sparse matrix, which makes
the adjoint exact by transposition.

Photon counts follow the Beer-Lambert law; the data misfit is the
count-weighted least squares

    E(alpha) = sum_m count_m (v_m(alpha) - vtilde_m)^2

which is the second-order log-likelihood model around the measured counts.
Rays with zero counts carry zero weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .geometry import Grid, ScalarField
from .knolls import ShapeDictionary, delta_eps, heaviside_eps
from .solver import SolveTrace, SolverParams, TraceRecord, asym_l1, bpdn_step

__all__ = [
    "MU_AIR",
    "MU_SOFT",
    "MU_BONE",
    "BLANK_SCAN_DEFAULT",
    "RayGeometry",
    "Sinogram",
    "CountData",
    "radon_apply",
    "radon_adjoint",
    "simulate_counts",
    "phantom_from_shapes",
    "save_phantom",
    "load_phantom",
    "save_counts",
    "load_counts",
    "CTProblem",
    "TwoPhaseCTProblem",
    "solve_two_phase",
    "fbp_baseline",
]

# nominal attenuation levels (1/cm) for air, soft tissue, and bone
MU_AIR = 2.7e-4
MU_SOFT = 0.2
MU_BONE = 0.7
BLANK_SCAN_DEFAULT = 4.0e6


@dataclass(frozen=True)
class RayGeometry:
    """Equioffset parallel rays at a fixed set of projection angles."""

    angles: tuple[float, ...]
    rays_per_angle: int
    detector_extent: float

    def __post_init__(self) -> None:
        angles = tuple(float(a) for a in self.angles)
        if len(angles) == 0:
            raise ValueError("need at least one projection angle")
        if self.rays_per_angle < 1:
            raise ValueError("rays_per_angle must be positive")
        if not self.detector_extent > 0:
            raise ValueError("detector_extent must be positive")
        object.__setattr__(self, "angles", angles)

    @property
    def n_angles(self) -> int:
        return len(self.angles)

    @property
    def n_rays(self) -> int:
        return self.n_angles * self.rays_per_angle

    @property
    def offsets(self) -> np.ndarray:
        """Detector offsets, centered across the extent."""
        r = self.rays_per_angle
        return (np.arange(r) + 0.5) / r * self.detector_extent - self.detector_extent / 2

    @property
    def detector_spacing(self) -> float:
        return self.detector_extent / self.rays_per_angle


def _trace_ray(grid: Grid, ox: float, oy: float, dx: float, dy: float):
    """Pixel indices and intersection lengths for one unit-direction ray."""
    x0, x1 = grid.x_min, grid.x_max
    y0, y1 = grid.y_min, grid.y_max
    t_lo, t_hi = -np.inf, np.inf
    for o, d, lo, hi in ((ox, dx, x0, x1), (oy, dy, y0, y1)):
        if abs(d) < 1e-14:
            if not lo <= o <= hi:
                return None
        else:
            ta, tb = (lo - o) / d, (hi - o) / d
            if ta > tb:
                ta, tb = tb, ta
            t_lo, t_hi = max(t_lo, ta), min(t_hi, tb)
    if t_hi <= t_lo + 1e-14:
        return None

    crossings = [np.array([t_lo, t_hi])]
    if abs(dx) >= 1e-14:
        t = (x0 + grid.dx * np.arange(grid.nx + 1) - ox) / dx
        crossings.append(t[(t > t_lo) & (t < t_hi)])
    if abs(dy) >= 1e-14:
        t = (y0 + grid.dy * np.arange(grid.ny + 1) - oy) / dy
        crossings.append(t[(t > t_lo) & (t < t_hi)])
    ts = np.unique(np.concatenate(crossings))
    lengths = np.diff(ts)
    mids = 0.5 * (ts[:-1] + ts[1:])
    keep = lengths > 1e-12
    lengths = lengths[keep]
    mids = mids[keep]
    if lengths.size == 0:
        return None
    ix = np.clip(((ox + mids * dx - x0) / grid.dx).astype(int), 0, grid.nx - 1)
    iy = np.clip(((oy + mids * dy - y0) / grid.dy).astype(int), 0, grid.ny - 1)
    return ix * grid.ny + iy, lengths


@lru_cache(maxsize=8)
def _system_matrix(geom: RayGeometry, grid: Grid) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for a, theta in enumerate(geom.angles):
        nx_, ny_ = np.cos(theta), np.sin(theta)
        dx, dy = -ny_, nx_
        for k, off in enumerate(geom.offsets):
            hit = _trace_ray(grid, off * nx_, off * ny_, dx, dy)
            if hit is None:
                continue
            idx, lengths = hit
            m = a * geom.rays_per_angle + k
            rows.append(np.full(idx.size, m))
            cols.append(idx)
            vals.append(lengths)
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
    mat = sp.csr_matrix(
        (vals, (rows, cols)), shape=(geom.n_rays, grid.nx * grid.ny)
    )
    mat.sum_duplicates()
    return mat


@dataclass(frozen=True)
class Sinogram:
    geometry: RayGeometry
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.geometry.n_rays,):
            raise ValueError("sinogram length does not match geometry")
        if not np.isfinite(vals).all():
            raise ValueError("sinogram values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def by_angle(self) -> np.ndarray:
        return self.values.reshape(self.geometry.n_angles, self.geometry.rays_per_angle)


@dataclass(frozen=True)
class CountData:
    """Measured photon counts with the blank-scan level and log measurements.

    measurements holds vtilde = -log(counts / lambda_T) plus any additive
    measurement noise; zero-count rays get measurement 0 and are excluded
    from the fit through their zero weight.
    """

    geometry: RayGeometry
    counts: np.ndarray
    lambda_T: float
    measurements: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.lambda_T > 0:
            raise ValueError("lambda_T must be positive")
        counts = np.asarray(self.counts, dtype=float)
        if counts.shape != (self.geometry.n_rays,):
            raise ValueError("count vector length does not match geometry")
        if (counts < 0).any() or not np.isfinite(counts).all():
            raise ValueError("counts must be finite and nonnegative")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if self.measurements is None:
            with np.errstate(divide="ignore"):
                meas = np.where(counts > 0, -np.log(counts / self.lambda_T), 0.0)
        else:
            meas = np.asarray(self.measurements, dtype=float)
            if meas.shape != counts.shape:
                raise ValueError("measurement vector length does not match geometry")
            if not np.isfinite(meas).all():
                raise ValueError("measurements must be finite")
            meas = meas.copy()
        meas.setflags(write=False)
        object.__setattr__(self, "measurements", meas)


def radon_apply(mu: ScalarField, geom: RayGeometry) -> Sinogram:
    """Line integrals of mu along every ray (exact per-pixel lengths)."""
    R = _system_matrix(geom, mu.grid)
    return Sinogram(geom, R @ mu.values.ravel())


def radon_adjoint(sino: Sinogram, grid: Grid) -> ScalarField:
    """Exact adjoint of radon_apply: transpose of the length matrix."""
    R = _system_matrix(sino.geometry, grid)
    back = R.T @ sino.values
    return ScalarField(grid, back.reshape(grid.shape))


def simulate_counts(
    mu_true: ScalarField,
    geom: RayGeometry,
    lambda_T: float = BLANK_SCAN_DEFAULT,
    gauss_pct: float = 0.0,
    seed=None,
    poisson: bool = True,
) -> CountData:
    """Beer-Lambert photon counts for a phantom, with optional noise.

    poisson=False keeps the ideal counts lambda_T exp(-v) (useful for
    noiseless studies).  gauss_pct adds zero-mean Gaussian noise with
    standard deviation gauss_pct * |vtilde| to each log measurement.
    """
    if lambda_T <= 0:
        raise ValueError("lambda_T must be positive")
    if gauss_pct < 0:
        raise ValueError("gauss_pct must be nonnegative")
    v = radon_apply(mu_true, geom).values
    lam = lambda_T * np.exp(-v)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(lam).astype(float) if poisson else lam.copy()
    with np.errstate(divide="ignore"):
        vt = np.where(counts > 0, -np.log(counts / lambda_T), 0.0)
    if gauss_pct > 0:
        vt = vt + gauss_pct * np.abs(vt) * rng.standard_normal(vt.shape)
    return CountData(geom, counts, lambda_T, measurements=vt)


def phantom_from_shapes(shapes_with_mu, grid: Grid, background: float = 0.0) -> ScalarField:
    """Attenuation map from (shape, mu) pairs painted in order."""
    from .geometry import rasterize

    vals = np.full(grid.shape, float(background))
    for shape, mu in shapes_with_mu:
        mask = rasterize(shape, grid).values
        vals[mask] = float(mu)
    return ScalarField(grid, vals)


# ---------------------------------------------------------------------------
# file formats: phantom shape lists and count tables


def save_phantom(path, shapes_with_mu, background: float = 0.0) -> None:
    """Write a phantom as tagged shape records, one ``shape <record>\\t<mu>``
    line per entry, painted in file order over the background level."""
    from .geometry import shape_to_record

    lines = ["# phantom v1", f"# background {float(background)!r}"]
    for shape, mu in shapes_with_mu:
        lines.append(f"shape {shape_to_record(shape)}\t{float(mu)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_phantom(path):
    """Read a phantom shape list: returns (shapes_with_mu, background)."""
    from .geometry import shape_from_record

    shapes, background = [], 0.0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                fields = line[1:].split()
                if len(fields) == 2 and fields[0] == "background":
                    background = float(fields[1])
                continue
            if not line.startswith("shape "):
                raise ValueError(f"{path}:{lineno}: expected a shape line")
            body, _, tag = line[len("shape "):].partition("\t")
            if not tag:
                raise ValueError(f"{path}:{lineno}: missing attenuation tag")
            shapes.append((shape_from_record(body.strip()), float(tag)))
    if not shapes:
        raise ValueError(f"{path}: phantom file lists no shapes")
    return shapes, background


def save_counts(path, data: CountData) -> None:
    """Write counts and log measurements as CSV with a geometry header."""
    g = data.geometry
    lines = [
        "# counts v1",
        "# angles " + " ".join(repr(a) for a in g.angles),
        f"# rays_per_angle {g.rays_per_angle}",
        f"# detector_extent {g.detector_extent!r}",
        f"# lambda_T {data.lambda_T!r}",
        "ray,count,measurement",
    ]
    for m in range(g.n_rays):
        lines.append(f"{m},{float(data.counts[m])!r},{float(data.measurements[m])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_counts(path) -> CountData:
    """Read a counts CSV written by :func:`save_counts`."""
    header: dict[str, str] = {}
    counts, meas = [], []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, rest = line[1:].strip().partition(" ")
                header[key] = rest
                continue
            if line.startswith("ray,"):
                continue
            _, c, v = line.split(",")
            counts.append(float(c))
            meas.append(float(v))
    try:
        geom = RayGeometry(
            tuple(float(a) for a in header["angles"].split()),
            int(header["rays_per_angle"]),
            float(header["detector_extent"]),
        )
        lambda_T = float(header["lambda_T"])
    except KeyError as exc:
        raise ValueError(f"{path}: counts file missing geometry header") from exc
    return CountData(geom, np.array(counts), lambda_T, measurements=np.array(meas))


# ---------------------------------------------------------------------------
# single-phase reconstruction problem


class CTProblem:
    """ResidualProblem for a two-level attenuation map u_in/u_ex.

    mu(alpha) = u_in H_eps(phi) + u_ex (1 - H_eps(phi)); the residual is
    R mu - vtilde under the count-weighted inner product.
    """

    def __init__(
        self,
        dictionary: ShapeDictionary,
        data: CountData,
        u_in: float = MU_SOFT,
        u_ex: float = MU_AIR,
        eps: float = 0.05,
    ):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.dictionary = dictionary
        self.data = data
        self.u_in = float(u_in)
        self.u_ex = float(u_ex)
        self.eps = float(eps)
        self._R = _system_matrix(data.geometry, dictionary.grid)
        self._w = data.counts
        self._vt = data.measurements
        self._lin_cache: tuple | None = None

    @property
    def dim(self) -> int:
        return len(self.dictionary)

    def _phi(self, alpha: np.ndarray) -> np.ndarray:
        alpha = self.dictionary.check_coefficients(alpha)
        return alpha @ self.dictionary.field_matrix - self.dictionary.c

    def mu_from_alpha(self, alpha: np.ndarray) -> ScalarField:
        H = heaviside_eps(self._phi(alpha), self.eps)
        mu = self.u_ex + (self.u_in - self.u_ex) * H
        return ScalarField(self.dictionary.grid, mu.reshape(self.dictionary.grid.shape))

    def residual(self, alpha: np.ndarray) -> np.ndarray:
        mu = self.u_ex + (self.u_in - self.u_ex) * heaviside_eps(self._phi(alpha), self.eps)
        return self._R @ mu - self._vt

    def energy(self, alpha: np.ndarray) -> float:
        r = self.residual(alpha)
        return self.inner(r, r)

    def _linearization(self, alpha: np.ndarray):
        alpha = self.dictionary.check_coefficients(alpha)
        key = alpha.tobytes()
        if self._lin_cache is not None and self._lin_cache[0] == key:
            return self._lin_cache[1]
        phi = alpha @ self.dictionary.field_matrix - self.dictionary.c
        band = np.flatnonzero(np.abs(phi) < self.eps)
        factor = (self.u_in - self.u_ex) * delta_eps(phi[band], self.eps)
        psi_band = np.ascontiguousarray(self.dictionary.field_matrix[:, band])
        R_band = self._R[:, band].tocsr()
        lin = (band, factor, psi_band, R_band)
        self._lin_cache = (key, lin)
        return lin

    def jac_apply(self, alpha: np.ndarray, eta: np.ndarray) -> np.ndarray:
        band, factor, psi_band, R_band = self._linearization(alpha)
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.dim,):
            raise ValueError("eta length does not match dictionary")
        if not band.size:
            return np.zeros(self.data.geometry.n_rays)
        return R_band @ (factor * (eta @ psi_band))

    def jac_adjoint(self, alpha: np.ndarray, s: np.ndarray) -> np.ndarray:
        band, factor, psi_band, R_band = self._linearization(alpha)
        s = np.asarray(s, dtype=float)
        if s.shape != (self.data.geometry.n_rays,):
            raise ValueError("s is not dimensioned like a sinogram")
        if not band.size:
            return np.zeros(self.dim)
        q = R_band.T @ (self._w * s)
        return psi_band @ (factor * q)

    def inner(self, s1: np.ndarray, s2: np.ndarray) -> float:
        return float(np.dot(self._w * s1, s2))


# ---------------------------------------------------------------------------
# two-phase reconstruction


class TwoPhaseCTProblem:
    """Nested two-level attenuation: background, body, and inclusion.

    mu = mu_a + (mu_s - mu_a) H(phi1) + (mu_b - mu_s) H(phi1) H(phi2),
    so phase 1 outlines the body against air and phase 2 the dense
    inclusion inside it.  Each phase is exposed as a ResidualProblem view
    over its own coefficients with the other phase frozen at the current
    state; coordinate descent alternates the two.
    """

    def __init__(
        self,
        dict1: ShapeDictionary,
        dict2: ShapeDictionary,
        data: CountData,
        mu_a: float = MU_AIR,
        mu_s: float = MU_SOFT,
        mu_b: float = MU_BONE,
        eps: float = 0.05,
    ):
        if dict1.grid != dict2.grid:
            raise ValueError("phase dictionaries must share a grid")
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.dicts = (dict1, dict2)
        self.data = data
        self.mu_a, self.mu_s, self.mu_b = float(mu_a), float(mu_s), float(mu_b)
        self.eps = float(eps)
        self.grid = dict1.grid
        self._R = _system_matrix(data.geometry, self.grid)
        self._w = data.counts
        self._vt = data.measurements
        self.alphas = [np.zeros(len(dict1)), np.zeros(len(dict2))]
        self._revs = [0, 0]
        self._caches: list[tuple | None] = [None, None]

    def set_alpha(self, phase: int, alpha: np.ndarray) -> None:
        alpha = self.dicts[phase].check_coefficients(alpha)
        self.alphas[phase] = alpha.copy()
        self._revs[phase] += 1
        # the other phase's linearization depends on this one's H field
        self._caches = [None, None]

    def _phi(self, phase: int, alpha: np.ndarray) -> np.ndarray:
        d = self.dicts[phase]
        return d.check_coefficients(alpha) @ d.field_matrix - d.c

    def mu_flat(self, alpha1: np.ndarray, alpha2: np.ndarray) -> np.ndarray:
        H1 = heaviside_eps(self._phi(0, alpha1), self.eps)
        H2 = heaviside_eps(self._phi(1, alpha2), self.eps)
        return self.mu_a + (self.mu_s - self.mu_a) * H1 + (self.mu_b - self.mu_s) * H1 * H2

    def mu_from_alpha(self, alpha1: np.ndarray, alpha2: np.ndarray) -> ScalarField:
        return ScalarField(self.grid, self.mu_flat(alpha1, alpha2).reshape(self.grid.shape))

    def joint_residual(self, alpha1: np.ndarray, alpha2: np.ndarray) -> np.ndarray:
        return self._R @ self.mu_flat(alpha1, alpha2) - self._vt

    def inner(self, s1: np.ndarray, s2: np.ndarray) -> float:
        return float(np.dot(self._w * s1, s2))

    def energy(self) -> float:
        r = self.joint_residual(*self.alphas)
        return self.inner(r, r)

    def _phase_linearization(self, phase: int, alpha: np.ndarray):
        other = 1 - phase
        key = (alpha.tobytes(), self._revs[other])
        cached = self._caches[phase]
        if cached is not None and cached[0] == key:
            return cached[1]
        phi_p = self._phi(phase, alpha)
        phi_o = self._phi(other, self.alphas[other])
        H_o = heaviside_eps(phi_o, self.eps)
        band = np.flatnonzero(np.abs(phi_p) < self.eps)
        dlt = delta_eps(phi_p[band], self.eps)
        if phase == 0:
            factor = dlt * ((self.mu_s - self.mu_a) + (self.mu_b - self.mu_s) * H_o[band])
        else:
            factor = (self.mu_b - self.mu_s) * H_o[band] * dlt
        psi_band = np.ascontiguousarray(self.dicts[phase].field_matrix[:, band])
        R_band = self._R[:, band].tocsr()
        lin = (band, factor, psi_band, R_band)
        self._caches[phase] = (key, lin)
        return lin

    def view(self, phase: int) -> "_PhaseView":
        if phase not in (0, 1):
            raise ValueError("phase must be 0 or 1")
        return _PhaseView(self, phase)


class _PhaseView:
    """One phase's coefficients as a ResidualProblem, other phase frozen."""

    def __init__(self, parent: TwoPhaseCTProblem, phase: int):
        self.parent = parent
        self.phase = phase

    @property
    def dim(self) -> int:
        return len(self.parent.dicts[self.phase])

    def residual(self, alpha: np.ndarray) -> np.ndarray:
        if self.phase == 0:
            return self.parent.joint_residual(alpha, self.parent.alphas[1])
        return self.parent.joint_residual(self.parent.alphas[0], alpha)

    def jac_apply(self, alpha: np.ndarray, eta: np.ndarray) -> np.ndarray:
        band, factor, psi_band, R_band = self.parent._phase_linearization(self.phase, alpha)
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.dim,):
            raise ValueError("eta length does not match phase dictionary")
        if not band.size:
            return np.zeros(self.parent.data.geometry.n_rays)
        return R_band @ (factor * (eta @ psi_band))

    def jac_adjoint(self, alpha: np.ndarray, s: np.ndarray) -> np.ndarray:
        band, factor, psi_band, R_band = self.parent._phase_linearization(self.phase, alpha)
        s = np.asarray(s, dtype=float)
        if s.shape != (self.parent.data.geometry.n_rays,):
            raise ValueError("s is not dimensioned like a sinogram")
        if not band.size:
            return np.zeros(self.dim)
        q = R_band.T @ (self.parent._w * s)
        return psi_band @ (factor * q)

    def inner(self, s1: np.ndarray, s2: np.ndarray) -> float:
        return self.parent.inner(s1, s2)


def solve_two_phase(
    problem: TwoPhaseCTProblem,
    alpha1: np.ndarray,
    alpha2: np.ndarray,
    params: SolverParams,
) -> tuple[np.ndarray, np.ndarray, SolveTrace]:
    """Coordinate descent: one damped Gauss-Newton step per phase per sweep.

    Each phase keeps its own warm-started l1 budget.  Stops when a full
    sweep moves both phases by no more than eps2, or params.max_outer
    sweeps elapse.
    """
    p = params.resolved(max(len(problem.dicts[0]), len(problem.dicts[1])))
    problem.set_alpha(0, np.asarray(alpha1, dtype=float))
    problem.set_alpha(1, np.asarray(alpha2, dtype=float))
    taus = [p.tau0, p.tau0]
    trace = SolveTrace(status="max_outer")

    def combined_l1() -> float:
        return asym_l1(problem.alphas[0], p.w) + asym_l1(problem.alphas[1], p.w)

    def active() -> int:
        return int(
            np.count_nonzero(np.abs(problem.alphas[0]) > 1e-8)
            + np.count_nonzero(np.abs(problem.alphas[1]) > 1e-8)
        )

    trace.records.append(
        TraceRecord(0, problem.energy(), combined_l1(), p.tau0, 0.0, 0, active())
    )

    for sweep in range(1, p.max_outer + 1):
        sweep_max_step = 0.0
        stalled = False
        for phase in (0, 1):
            view = problem.view(phase)
            alpha = problem.alphas[phase]
            G = view.residual(alpha)
            E = view.inner(G, G)
            delta, taus[phase], info = bpdn_step(
                view, alpha, p.sigma, taus[phase], p, residual0=G
            )
            step_norm = float(np.linalg.norm(delta))
            if step_norm == 0.0:
                trace.records.append(
                    TraceRecord(
                        sweep, E, combined_l1(), taus[phase], 0.0, 0, active(),
                        f"phase{phase + 1}:{info.exit}",
                    )
                )
                continue
            J = 2.0 * view.inner(view.jac_apply(alpha, delta), G)
            t, backtracks, accepted = 1.0, 0, False
            while backtracks <= 60:
                cand = alpha + t * delta
                Gc = view.residual(cand)
                Ec = view.inner(Gc, Gc)
                needed = -p.gamma * t * J if J < 0 else 1e-12 * max(1.0, E)
                if E - Ec >= needed:
                    accepted = True
                    break
                t *= p.beta
                backtracks += 1
            if not accepted:
                stalled = True
                break
            problem.set_alpha(phase, cand)
            applied = t * step_norm
            sweep_max_step = max(sweep_max_step, applied)
            trace.records.append(
                TraceRecord(
                    sweep, Ec, combined_l1(), taus[phase], applied, backtracks,
                    active(), f"phase{phase + 1}:{info.exit}",
                )
            )
        if stalled:
            trace.status = "line-search stall"
            break
        if sweep_max_step <= p.eps2:
            trace.status = "converged"
            break

    return problem.alphas[0], problem.alphas[1], trace


# ---------------------------------------------------------------------------
# filtered back projection baseline


def fbp_baseline(data: CountData, grid: Grid) -> ScalarField:
    """Ramp-filtered back projection of the log measurements onto a grid."""
    geom = data.geometry
    if geom.n_angles < 2:
        raise ValueError("FBP needs at least 2 projection angles")
    p = data.measurements.reshape(geom.n_angles, geom.rays_per_angle)
    n_pad = 1
    while n_pad < 2 * geom.rays_per_angle:
        n_pad *= 2
    freqs = np.fft.fftfreq(n_pad, d=geom.detector_spacing)
    filtered = np.fft.ifft(np.fft.fft(p, n=n_pad, axis=1) * np.abs(freqs), axis=1)
    q = np.real(filtered[:, : geom.rays_per_angle])

    X, Y = grid.mesh()
    recon = np.zeros(grid.shape)
    offsets = geom.offsets
    for a, theta in enumerate(geom.angles):
        s = X * np.cos(theta) + Y * np.sin(theta)
        recon += np.interp(s, offsets, q[a], left=0.0, right=0.0)
    recon *= np.pi / geom.n_angles
    return ScalarField(grid, recon)
