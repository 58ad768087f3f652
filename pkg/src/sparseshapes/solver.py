"""Sparsity-promoting Gauss-Newton solver.

Minimizes E(alpha) = ||G(alpha)||^2 subject to a budget on an asymmetric
l1 norm that prices positive and negative coefficients differently.  Each
outer iteration linearizes G, solves the resulting Lasso with a spectral
projected gradient method, grows the l1 budget tau by a Newton step on the
Pareto curve of the linearized problem, and accepts the step under Armijo
backtracking.

Problems supply their own residual, Jacobian actions, and inner product on
the data space, so applications with weighted or stacked residuals plug in
without touching the solver.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol, Sequence

import numpy as np

__all__ = [
    "SolverError",
    "ResidualProblem",
    "AffineLeastSquaresProblem",
    "SolverParams",
    "TraceRecord",
    "SolveTrace",
    "BpdnInfo",
    "asym_l1",
    "asym_linf_polar",
    "project_asym_ball",
    "spg_lasso",
    "pareto_slope",
    "bpdn_step",
    "solve",
    "check_descent",
    "adjoint_probe",
]

_ACTIVE_TOL = 1e-8  # coefficient magnitude counted as active
_SPG_MEMORY = 10  # nonmonotone line-search history length
_STEP_MIN = 1e-16
_STEP_MAX = 1e5


class SolverError(RuntimeError):
    """Numerical breakdown inside the solver."""


class ResidualProblem(Protocol):
    """Residual map G with Jacobian actions and a data-space inner product.

    Contract: for all coefficient vectors eta and data vectors s,
    ``inner(jac_apply(alpha, eta), s) == eta @ jac_adjoint(alpha, s)``.
    """

    @property
    def dim(self) -> int: ...

    def residual(self, alpha: np.ndarray) -> np.ndarray: ...

    def jac_apply(self, alpha: np.ndarray, eta: np.ndarray) -> np.ndarray: ...

    def jac_adjoint(self, alpha: np.ndarray, s: np.ndarray) -> np.ndarray: ...

    def inner(self, s1: np.ndarray, s2: np.ndarray) -> float: ...


class AffineLeastSquaresProblem:
    """G(alpha) = A alpha - b with the Euclidean inner product."""

    def __init__(self, A: np.ndarray, b: np.ndarray):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ValueError("need A (m, n) and b (m,)")
        self.A = A
        self.b = b

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def residual(self, alpha):
        return self.A @ alpha - self.b

    def jac_apply(self, alpha, eta):
        return self.A @ eta

    def jac_adjoint(self, alpha, s):
        return self.A.T @ s

    def inner(self, s1, s2):
        return float(np.dot(s1, s2))


def _hnorm(problem: ResidualProblem, s: np.ndarray) -> float:
    return float(np.sqrt(max(problem.inner(s, s), 0.0)))


# ---------------------------------------------------------------------------
# asymmetric l1 geometry


def asym_l1(alpha: np.ndarray, w: float) -> float:
    """Sum of positive entries plus w times the magnitudes of negative ones."""
    if w <= 0:
        raise ValueError("w must be positive")
    a = np.asarray(alpha, dtype=float)
    return float(np.sum(np.where(a >= 0, a, -w * a)))


def asym_linf_polar(alpha: np.ndarray, w: float) -> float:
    """Polar of the asymmetric l1 norm: max of a_i+ and |a_j|/w over signs."""
    if w <= 0:
        raise ValueError("w must be positive")
    a = np.asarray(alpha, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.where(a >= 0, a, -a / w)))


def project_asym_ball(alpha_tilde: np.ndarray, tau: float, w: float) -> np.ndarray:
    """Euclidean projection onto {alpha : asym_l1(alpha, w) <= tau}.

    The minimizer keeps the input's signs, which turns the constraint into a
    weighted l1 ball (weight 1 on nonnegative entries, w on negative ones);
    that ball is handled by exact sort-and-threshold.
    """
    if w <= 0:
        raise ValueError("w must be positive")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    a = np.asarray(alpha_tilde, dtype=float)
    d = np.where(a >= 0, 1.0, w)
    b = np.abs(a)
    budget = float(np.dot(d, b))
    if budget <= tau:
        return a.copy()
    if tau == 0.0:
        return np.zeros_like(a)

    order = np.argsort(-b / d, kind="stable")
    bs = b[order]
    ds = d[order]
    csdb = np.cumsum(ds * bs)
    csd2 = np.cumsum(ds * ds)
    lam = (csdb - tau) / csd2
    ratios = bs / ds
    # support = first k sorted entries; k is the last index where the
    # candidate threshold still leaves entry k positive
    keep = lam < ratios
    if not keep.any():
        return np.zeros_like(a)
    k = int(np.nonzero(keep)[0][-1])
    soft = max(lam[k], 0.0)
    x = np.maximum(b - soft * d, 0.0)

    # KKT touch-up: the active constraint must hold to high accuracy
    attained = float(np.dot(d, x))
    slack = attained - tau
    if abs(slack) > 1e-10 * max(1.0, tau):
        soft += slack / csd2[k]
        x = np.maximum(b - soft * d, 0.0)

    return np.where(a >= 0, x, -x)


# ---------------------------------------------------------------------------
# parameters and traces


@dataclass(frozen=True)
class SolverParams:
    """Tuning knobs shared by the Lasso, Pareto, and Gauss-Newton layers.

    sigma is the target residual norm of the data-fit constraint; tau_mx
    caps the l1 budget (applications usually set it to a small multiple of
    the dictionary lift).  eps1 and eps2 default to 1e-9 (1 + tau_mx) and
    1e-8 sqrt(n) when left as None.
    """

    sigma: float = 0.0
    w: float = 1.0
    gamma: float = 1e-4
    beta: float = 0.5
    tau0: float = 0.0
    tau_mx: float = np.inf
    eps1: float | None = None
    eps2: float | None = None
    max_outer: int = 100
    max_spg: int = 500
    spg_tol: float = 1e-6
    probe_adjoint: bool = False

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.w <= 0:
            raise ValueError("w must be positive")
        if not 1e-5 <= self.gamma <= 0.1:
            raise ValueError("gamma must lie in [1e-5, 0.1]")
        if not 0.1 <= self.beta <= 0.5:
            raise ValueError("beta must lie in [0.1, 0.5]")
        if self.tau0 < 0 or self.tau_mx <= 0:
            raise ValueError("need tau0 >= 0 and tau_mx > 0")
        if self.tau_mx <= self.tau0:
            raise ValueError("tau_mx must exceed tau0")
        if self.max_outer < 1 or self.max_spg < 1:
            raise ValueError("iteration limits must be positive")

    def resolved(self, n: int) -> "SolverParams":
        """Fill eps1/eps2 defaults for a problem of dimension n."""
        eps1 = self.eps1
        if eps1 is None:
            base = self.tau_mx if np.isfinite(self.tau_mx) else 0.0
            eps1 = 1e-9 * (1.0 + base)
        eps2 = self.eps2 if self.eps2 is not None else 1e-8 * np.sqrt(n)
        return replace(self, eps1=eps1, eps2=eps2)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    energy: float
    asym_l1: float
    tau: float
    step_norm: float
    backtracks: int
    active_set: int
    exit: str = ""
    descent_ok: bool | None = None


@dataclass
class SolveTrace:
    """Per-outer-iteration history of a solve."""

    records: list[TraceRecord] = field(default_factory=list)
    status: str = ""

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iter", "energy", "asym_l1", "tau", "step_norm", "backtracks", "active_set"]
            )
            for r in self.records:
                writer.writerow(
                    [
                        r.iteration,
                        repr(r.energy),
                        repr(r.asym_l1),
                        repr(r.tau),
                        repr(r.step_norm),
                        r.backtracks,
                        r.active_set,
                    ]
                )


@dataclass(frozen=True)
class BpdnInfo:
    """Outcome of one budget-update loop: which exit fired and where."""

    exit: str
    tau_updates: int
    lin_residual_norm: float
    lasso_solves: int = 0


# ---------------------------------------------------------------------------
# inner Lasso solver


def spg_lasso(
    problem: ResidualProblem,
    alpha_k: np.ndarray,
    tau: float,
    w: float,
    params: SolverParams,
    delta0: np.ndarray | None = None,
    residual0: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the linearized Lasso at alpha_k:

        min_delta ||G'(alpha_k) delta + G(alpha_k)||^2
        s.t.      asym_l1(alpha_k + delta, w) <= tau

    by spectral projected gradient over theta = alpha_k + delta, with
    Barzilai-Borwein steps and a nonmonotone line search.  Returns the step
    and the final linearized residual vector.  The objective is quadratic
    along any fixed direction, so line-search trials cost no operator
    applications.
    """
    alpha_k = np.asarray(alpha_k, dtype=float)
    G0 = problem.residual(alpha_k) if residual0 is None else residual0
    if params.probe_adjoint:
        err = adjoint_probe(problem, alpha_k, np.random.default_rng(0))
        if err > 1e-8:
            raise SolverError(f"adjoint inconsistency: probe error {err:.3e}")

    def eval_theta(theta: np.ndarray) -> tuple[np.ndarray, float]:
        dvec = theta - alpha_k
        if not dvec.any():
            r = G0.copy()
        else:
            r = problem.jac_apply(alpha_k, dvec) + G0
        return r, problem.inner(r, r)

    theta = project_asym_ball(alpha_k, tau, w)
    r, f = eval_theta(theta)
    if delta0 is not None and delta0.any():
        cand = project_asym_ball(alpha_k + delta0, tau, w)
        r_c, f_c = eval_theta(cand)
        if f_c < f:
            theta, r, f = cand, r_c, f_c

    g = 2.0 * problem.jac_adjoint(alpha_k, r)
    d_unit = project_asym_ball(theta - g, tau, w) - theta
    pg_ref = max(1.0, float(np.abs(d_unit).max()) if d_unit.size else 0.0)
    dx = float(np.abs(d_unit).max()) if d_unit.size else 0.0
    step = 1.0 if dx == 0.0 else min(_STEP_MAX, max(_STEP_MIN, 1.0 / dx))
    f_hist = [f]

    for it in range(params.max_spg):
        pg_norm = float(np.abs(d_unit).max()) if d_unit.size else 0.0
        if pg_norm <= params.spg_tol * pg_ref:
            break

        d = project_asym_ball(theta - step * g, tau, w) - theta
        if not d.any():
            break
        Ad = problem.jac_apply(alpha_k, d)
        quad_a = problem.inner(Ad, Ad)
        quad_b = problem.inner(r, Ad)
        gtd = 2.0 * quad_b
        if gtd >= 0.0:
            # rounding artifact near optimality; retry with a conservative step
            step = max(step * 0.1, _STEP_MIN)
            d_unit = project_asym_ball(theta - g, tau, w) - theta
            continue

        f_max = max(f_hist)
        lam = 1.0
        accepted = False
        for _ in range(50):
            f_new = f + lam * (gtd + lam * quad_a)
            if f_new <= f_max + params.gamma * lam * gtd:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break

        s = lam * d
        theta = theta + s
        r = r + lam * Ad
        f = f_new
        if (it + 1) % 100 == 0:
            r, f = eval_theta(theta)  # clear accumulated drift

        g_new = 2.0 * problem.jac_adjoint(alpha_k, r)
        y = g_new - g
        sty = float(np.dot(s, y))
        sts = float(np.dot(s, s))
        step = _STEP_MAX if sty <= 0 else min(_STEP_MAX, max(_STEP_MIN, sts / sty))
        g = g_new
        f_hist.append(f)
        if len(f_hist) > _SPG_MEMORY:
            f_hist.pop(0)
        d_unit = project_asym_ball(theta - g, tau, w) - theta

    return theta - alpha_k, r


# ---------------------------------------------------------------------------
# Pareto curve machinery


def pareto_slope(
    problem: ResidualProblem,
    alpha_k: np.ndarray,
    delta: np.ndarray,
    residual_vec: np.ndarray,
    w: float,
) -> float:
    """Slope of the linearized Pareto curve at the current budget:

        phi'(tau) = -polar(-G'* r) / ||r||

    with the polar norm dual to the asymmetric l1 constraint.  The
    residual here is model minus data, so the constraint multiplier is
    the polar of the *negated* adjoint; for w = 1 the two signs agree,
    but for lopsided weights only this one matches the curve.
    """
    rnorm = _hnorm(problem, residual_vec)
    if rnorm == 0.0:
        raise SolverError("zero residual: Pareto slope undefined on the basis-pursuit branch")
    z = problem.jac_adjoint(np.asarray(alpha_k, dtype=float), residual_vec)
    return -asym_linf_polar(-z, w) / rnorm


def bpdn_step(
    problem: ResidualProblem,
    alpha_k: np.ndarray,
    sigma: float,
    tau_in: float,
    params: SolverParams,
    residual0: np.ndarray | None = None,
) -> tuple[np.ndarray, float, BpdnInfo]:
    """One Gauss-Newton step: grow tau along the linearized Pareto curve
    until the step is certified or the budget stalls.

    Loop: solve the Lasso at tau, take a Newton update
    dtau = (sigma - ||lin. residual||) / phi'(tau), and stop when

    * the linearized residual already meets sigma ("feasible"),
    * the Lasso was solved at tau >= asym_l1(alpha_k) ("tau_geq_l1",
      the returned step is then a certified descent direction),
    * the Newton update fell below eps1 ("dtau_small"), or
    * the budget is pinned at tau_mx ("tau_max").

    Returns the last step, the updated budget for warm starting, and which
    exit fired.
    """
    alpha_k = np.asarray(alpha_k, dtype=float)
    p = params.resolved(problem.dim)
    G0 = problem.residual(alpha_k) if residual0 is None else residual0
    gnorm = _hnorm(problem, G0)
    if gnorm <= sigma:
        return np.zeros(problem.dim), tau_in, BpdnInfo("feasible", 0, gnorm, 0)

    tau = float(np.clip(tau_in, 0.0, p.tau_mx))
    alpha_norm = asym_l1(alpha_k, p.w)
    delta: np.ndarray | None = None
    updates = 0
    solves = 0
    while True:
        delta, r = spg_lasso(problem, alpha_k, tau, p.w, p, delta0=delta, residual0=G0)
        solves += 1
        rnorm = _hnorm(problem, r)
        if rnorm <= sigma * (1 + 1e-9) + 1e-12:
            exit_name = "feasible"
            break
        # a Lasso solved at tau >= ||alpha_k|| admits the zero step, so this
        # delta cannot raise the linearized residual: certified descent.
        # tau == 0 is excluded: there the feasible set is a single point and
        # the step carries no curve information.
        certified = tau > 0.0 and tau >= alpha_norm
        slope = pareto_slope(problem, alpha_k, delta, r, p.w)
        if slope >= 0.0:
            raise SolverError("nonnegative Pareto slope: numerical breakdown")
        dtau = (sigma - rnorm) / slope
        at_cap = tau >= p.tau_mx
        tau_new = min(tau + dtau, p.tau_mx)
        applied = tau_new - tau
        updates += 1
        tau = tau_new
        if certified:
            exit_name = "tau_geq_l1"
            break
        if at_cap:
            exit_name = "tau_max"
            break
        if applied <= p.eps1:
            exit_name = "dtau_small"
            break
        if updates > 100:
            raise SolverError("Pareto budget updates failed to terminate")
    return delta, tau, BpdnInfo(exit_name, updates, rnorm, solves)


def check_descent(
    problem: ResidualProblem, alpha: np.ndarray, delta: np.ndarray, sigma: float
) -> bool:
    """Check the step's predicted energy slope against a residual target.

    True iff J_E(alpha) delta <= sigma - ||G(alpha)||^2 up to roundoff,
    where J_E(alpha) delta = 2 <G' delta, G>.  ``sigma`` is a bound in
    squared-residual units, matching ||G||^2.
    """
    alpha = np.asarray(alpha, dtype=float)
    G = problem.residual(alpha)
    E = problem.inner(G, G)
    J = 2.0 * problem.inner(problem.jac_apply(alpha, np.asarray(delta, float)), G)
    scale = max(1.0, E, abs(J))
    return J <= sigma - E + 1e-9 * scale


def adjoint_probe(
    problem: ResidualProblem,
    alpha: np.ndarray,
    rng: np.random.Generator,
    trials: int = 3,
) -> float:
    """Max relative error of <G' eta, s> == eta . G'* s over random probes."""
    alpha = np.asarray(alpha, dtype=float)
    s_shape = problem.residual(alpha).shape
    worst = 0.0
    for _ in range(trials):
        eta = rng.standard_normal(problem.dim)
        s = rng.standard_normal(s_shape)
        lhs = problem.inner(problem.jac_apply(alpha, eta), s)
        rhs = float(np.dot(eta, problem.jac_adjoint(alpha, s)))
        denom = max(abs(lhs), abs(rhs), 1e-300)
        err = abs(lhs - rhs) / denom if max(abs(lhs), abs(rhs)) > 0 else 0.0
        worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# outer Gauss-Newton loop

_MAX_BACKTRACKS = 60


def solve(
    problem: ResidualProblem,
    alpha0: np.ndarray,
    params: SolverParams,
    callbacks: Sequence[Callable[[int, np.ndarray], None]] = (),
) -> tuple[np.ndarray, SolveTrace]:
    """Run damped Gauss-Newton iterations until the accepted step is tiny.

    Parameters
    ----------
    problem : ResidualProblem
        Supplies G, its Jacobian actions, and the data inner product.
    alpha0 : array
        Starting coefficients, length problem.dim.
    params : SolverParams
        sigma, the asymmetry weight w, budget controls, and tolerances.
    callbacks : sequence of callables, optional
        Each is invoked as cb(iteration, alpha) after an accepted step;
        applications use this to refresh data-dependent state (for example
        region statistics).  The residual is re-evaluated afterwards.

    Returns
    -------
    (alpha, trace) : final coefficients and the iteration trace.  The trace
    status is "converged", "max_outer", or "line-search stall"; a stall
    returns the best (most recent accepted) iterate.
    """
    alpha = np.array(alpha0, dtype=float)
    if alpha.shape != (problem.dim,):
        raise ValueError(f"alpha0 must have shape ({problem.dim},)")
    p = params.resolved(problem.dim)

    trace = SolveTrace(status="max_outer")
    tau = p.tau0
    G = problem.residual(alpha)
    E = problem.inner(G, G)

    def active(a: np.ndarray) -> int:
        return int(np.count_nonzero(np.abs(a) > _ACTIVE_TOL))

    trace.records.append(
        TraceRecord(0, E, asym_l1(alpha, p.w), tau, 0.0, 0, active(alpha))
    )

    for k in range(1, p.max_outer + 1):
        delta, tau, info = bpdn_step(problem, alpha, p.sigma, tau, p, residual0=G)
        step_norm = float(np.linalg.norm(delta))
        if step_norm == 0.0:
            trace.records.append(
                TraceRecord(
                    k, E, asym_l1(alpha, p.w), tau, 0.0, 0, active(alpha), info.exit, None
                )
            )
            trace.status = "converged"
            break

        Adelta = problem.jac_apply(alpha, delta)
        J = 2.0 * problem.inner(Adelta, G)
        # certified and root exits keep the linearized residual at or below
        # ||G||, which is exactly J <= -||G' delta||^2
        descent_scale = max(1.0, E, abs(J))
        descent_ok = J + problem.inner(Adelta, Adelta) <= 1e-9 * descent_scale

        t = 1.0
        backtracks = 0
        accepted = False
        while backtracks <= _MAX_BACKTRACKS:
            cand = alpha + t * delta
            Gc = problem.residual(cand)
            Ec = problem.inner(Gc, Gc)
            needed = -p.gamma * t * J if J < 0 else 1e-12 * max(1.0, E)
            if E - Ec >= needed:
                accepted = True
                break
            t *= p.beta
            backtracks += 1
        if not accepted:
            trace.status = "line-search stall"
            break

        alpha = cand
        G, E = Gc, Ec
        applied_norm = t * step_norm
        trace.records.append(
            TraceRecord(
                k,
                E,
                asym_l1(alpha, p.w),
                tau,
                applied_norm,
                backtracks,
                active(alpha),
                info.exit,
                descent_ok,
            )
        )
        if callbacks:
            for cb in callbacks:
                cb(k, alpha)
            G = problem.residual(alpha)
            E = problem.inner(G, G)
        if applied_norm <= p.eps2:
            trace.status = "converged"
            break

    return alpha, trace
