"""Reference implementations used only by the tests.

Everything here is deliberately independent of the package internals:
closed-form enumerations, exhaustive scans, and plain quadrature loops
that are slow but easy to audit.  Tests compare the fast library code
against these.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# ---------------------------------------------------------------------------
# asymmetric l1 machinery


def asym_l1_ref(x, w):
    x = np.asarray(x, dtype=float)
    return float(np.sum(np.where(x >= 0, x, -w * x)))


def project_ball_reference(a, tau, w):
    """Exact projection onto {x : asym_l1(x, w) <= tau} by support enumeration.

    Zeroing a coordinate whose sign opposes a, or clamping |x_i| down to
    |a_i|, decreases both the distance and the penalty, so the minimizer
    is x_i = s_i y_i with s_i = sign(a_i) and 0 <= y_i <= |a_i|.  In y
    coordinates the problem is projection onto {c . y <= tau, y >= 0}
    with per-coordinate prices c_i in {1, w}.  For every support S the
    restricted minimizer is either y_S = b_S (when that is feasible) or
    the active-constraint stationary point y_S = b_S - lam c_S.  All
    candidates are feasible points and the true minimizer shows up under
    its own support, so the best candidate is exact.
    """
    a = np.asarray(a, dtype=float)
    n = a.size
    signs = np.sign(a)
    b = np.abs(a)
    c = np.where(a >= 0, 1.0, float(w))
    if float(c @ b) <= tau:
        return a.copy()
    best = np.zeros(n)
    best_val = float(b @ b)
    for bits in itertools.product((0, 1), repeat=n):
        sel = np.array(bits, dtype=bool)
        if not sel.any():
            continue
        y = np.zeros(n)
        budget = float(c[sel] @ b[sel])
        if budget <= tau:
            y[sel] = b[sel]
        else:
            lam = (budget - tau) / float(c[sel] @ c[sel])
            cand = b[sel] - lam * c[sel]
            if cand.min() < -1e-12:
                continue
            y[sel] = np.maximum(cand, 0.0)
        val = float((y - b) @ (y - b))
        if val < best_val:
            best, best_val = y, val
    return signs * best


def project_ball_gridsearch(a, tau, w, pts0=1201, pts=201, levels=3):
    """Brute-force projection: a dense box scan plus boundary snaps.

    Level 0 sweeps a dense grid over a padded box around [0, a] (padding
    past zero, so a sign error in the fast code would be caught).  Grid
    points outside the ball are rescaled radially onto the boundary (the
    penalty is positively homogeneous), which makes the candidate cloud
    O(h)-dense along the constraint surface where the minimizer lives,
    so the best candidate localizes the minimizer to a few spacings.
    Later levels re-scan a generous +-8h box around the best candidate.
    """
    a = np.asarray(a, dtype=float)
    n = a.size
    pad = 0.05 * (float(np.abs(a).max()) + 1.0)
    lo0 = np.minimum(0.0, a) - pad
    hi0 = np.maximum(0.0, a) + pad
    best = np.zeros(n)
    best_val = float(a @ a)
    lo, hi = lo0, hi0
    npts = pts0
    for _ in range(levels + 1):
        axes = [np.linspace(lo[i], hi[i], npts) for i in range(n)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        pen = np.where(mesh >= 0, mesh, -w * mesh).sum(axis=1)
        scale = np.ones_like(pen)
        over = pen > tau
        scale[over] = tau / pen[over]
        cand = mesh * scale[:, None]
        d2 = ((cand - a) ** 2).sum(axis=1)
        k = int(np.argmin(d2))
        if d2[k] < best_val:
            best, best_val = cand[k].copy(), float(d2[k])
        h = (hi - lo) / (npts - 1)
        lo = np.maximum(lo0, best - 8.0 * h)
        hi = np.minimum(hi0, best + 8.0 * h)
        npts = pts
    return best


def bpdn_reference(A, b, sigma):
    """Exact min ||x||_1 s.t. ||Ax - b|| <= sigma by sign-pattern enumeration.

    For ||b|| > sigma the optimum sits on the residual sphere.  Fixing a
    support S and sign vector s on it, stationarity of s . x_S on the
    sphere gives x_S = x_LS - t (A_S' A_S)^{-1} s with t >= 0 chosen so
    the residual norm is exactly sigma; the least-squares residual is
    orthogonal to range(A_S), so the cross term drops and

        t = sqrt((sigma^2 - ||r_LS||^2) / ||A_S (A_S' A_S)^{-1} s||^2).

    Supports with ||r_LS|| > sigma cannot reach the sphere from inside
    and are skipped, as are candidates whose computed signs disagree
    with s.  Every surviving candidate is feasible and the optimum shows
    up under its own sign pattern, so the best candidate is exact.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    bnorm2 = float(b @ b)
    if math.sqrt(bnorm2) <= sigma * (1.0 + 1e-12) + 1e-15:
        return np.zeros(n)
    best = None
    best_val = math.inf
    for pattern in itertools.product((-1, 0, 1), repeat=n):
        s = np.array(pattern, dtype=float)
        sel = s != 0
        if not sel.any():
            continue
        As = A[:, sel]
        gram = As.T @ As
        try:
            gram_inv = np.linalg.inv(gram)
        except np.linalg.LinAlgError:
            continue
        xls = gram_inv @ (As.T @ b)
        rls = As @ xls - b
        rn2 = float(rls @ rls)
        if rn2 > sigma**2 + 1e-12 * max(1.0, bnorm2):
            continue
        d = gram_inv @ s[sel]
        cn2 = float(d @ (gram @ d))
        gap = sigma**2 - rn2
        t = math.sqrt(gap / cn2) if gap > 0 and cn2 > 0 else 0.0
        xs = xls - t * d
        if np.any(s[sel] * xs < -1e-10):
            continue
        val = float(s[sel] @ xs)
        if val < best_val:
            x = np.zeros(n)
            x[sel] = xs
            best, best_val = x, val
    return best


# ---------------------------------------------------------------------------
# blended Heaviside and region energy, coded straight off the formulas


def heaviside_ref(x, eps):
    if x <= -eps:
        return 0.0
    if x >= eps:
        return 1.0
    return 0.5 + x / (2.0 * eps) + math.sin(math.pi * x / eps) / (2.0 * math.pi)


def delta_ref(x, eps):
    if abs(x) >= eps:
        return 0.0
    return (1.0 + math.cos(math.pi * x / eps)) / (2.0 * eps)


def seg_energy_ref(phi, pixels, observed, u_in, u_ex, eps, pixel_area):
    """Region energy by a plain double loop over observed pixels."""
    nx, ny = phi.shape
    total = 0.0
    for i in range(nx):
        for j in range(ny):
            if not observed[i, j]:
                continue
            h = heaviside_ref(phi[i, j], eps)
            u = pixels[i, j]
            total += ((u - u_in) ** 2 * h + (u - u_ex) ** 2 * (1.0 - h)) * pixel_area
    return total


# ---------------------------------------------------------------------------
# directional finite differences with clamp-boundary screening


def fd_directional(res_fn, alpha, eta, h=1e-6):
    """Central difference of a residual map along eta."""
    return (res_fn(alpha + h * eta) - res_fn(alpha - h * eta)) / (2.0 * h)


def clamp_clearance(phi, eps):
    """Distance from the nearest pixel to the +-eps seams of the blend."""
    phi = np.asarray(phi, dtype=float)
    return float(np.min(np.abs(np.abs(phi) - eps)))
