"""Shared test oracles: scalar minimization by dense grid plus golden-section
refinement, central finite differences, an independent splitting solver for
the inner convex subproblems, and support enumeration for tiny problems.

Everything here is deliberately written from the mathematical definitions,
not from the library code paths it is used to check.
"""

import numpy as np
import pytest

GOLD = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, iters=120):
    """Golden-section minimization of a unimodal scalar function on [lo, hi]."""
    a, b = float(lo), float(hi)
    c = b - GOLD * (b - a)
    d = a + GOLD * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLD * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLD * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _bisect_secant_sign(f, a, b, h, iters=48):
    # Locate the minimizer of a convex f by bisecting on the sign of the
    # wide symmetric secant f(t+h) - f(t-h); h large enough that the sign is
    # not rounding noise, the interval small enough to bracket the min.
    k = 0
    while f(a + h) - f(a - h) > 0 and k < 8:
        a -= b - a
        k += 1
    while f(b + h) - f(b - h) < 0 and k < 16:
        b += b - a
        k += 1
    for _ in range(iters):
        m = 0.5 * (a + b)
        dm = f(m + h) - f(m - h)
        if dm == 0.0:
            return m
        if dm < 0.0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _refine_min(f, a, b):
    # Two bisection stages (the second with a narrower secant, immune to the
    # curvature-scale rounding plateau), then an exact comparison against the
    # kink candidate t = 0, which attracts an interval of prox inputs.
    t1 = _bisect_secant_sign(f, a, b, h=1e-4)
    t2 = _bisect_secant_sign(f, t1 - 3e-4, t1 + 3e-4, h=1e-6)
    if abs(t2) < 1e-3 and f(0.0) <= f(t2):
        return 0.0
    return t2


def grid_refine_min(f, lo, hi, grid=2001):
    """Global scalar minimization: dense grid scan for the basin, then
    bisection refinement.  Returns the argmin."""
    ts = np.linspace(lo, hi, grid)
    vals = np.array([f(t) for t in ts])
    i = int(np.argmin(vals))
    a = ts[max(i - 2, 0)]
    b = ts[min(i + 2, grid - 1)]
    return _refine_min(f, a, b)


def grid_refine_min_vec(fvec, lo, hi, grid=2001):
    """Same as grid_refine_min but with a vectorized objective for the scan."""
    ts = np.linspace(lo, hi, grid)
    vals = fvec(ts)
    i = int(np.argmin(vals))
    a = ts[max(i - 2, 0)]
    b = ts[min(i + 2, grid - 1)]
    return _refine_min(lambda t: float(fvec(np.asarray([t], dtype=float))[0]), a, b)


def bisect_root(g, a, b, iters=200):
    """Bisection for the root of a nondecreasing scalar function with
    g(a) <= 0 <= g(b)."""
    ga = g(a)
    if ga >= 0.0:
        return a
    for _ in range(iters):
        m = 0.5 * (a + b)
        gm = g(m)
        if gm == 0.0:
            return m
        if gm < 0.0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


# Subgradient-sign prox oracles: each minimizes the stated scalar objective
# by bisecting the sign of its derivative, written out from the objective
# definition by hand.  Function-value-only refinement cannot certify 1e-8
# argmin positions in float64 (the comparison plateau is ~sqrt(eps |f| /
# curvature)), while the derivative sign is exact algebra.


def prox_oracle_weighted_l1_ridge(z, om, mu, gam):
    # objective om |t| + mu t^2 / 2 + gam (t - z)^2 / 2
    if abs(gam * z) <= om:
        return 0.0
    tau = abs(z)
    sgn = 1.0 if z > 0 else -1.0

    def g(t):
        return om + mu * t + gam * (t - tau)

    return sgn * bisect_root(g, 0.0, tau + 1.0)


def prox_oracle_l1_scaled(v, n, g2):
    # objective |t| / n + g2 (t - v)^2 / 2
    if abs(g2 * v) <= 1.0 / n:
        return 0.0
    tau = abs(v)
    sgn = 1.0 if v > 0 else -1.0

    def g(t):
        return 1.0 / n + g2 * (t - tau)

    return sgn * bisect_root(g, 0.0, tau + 1.0)


def prox_oracle_moreau_l1(eta, eps, sig, n):
    # objective huber(t) + sig (t - eta)^2 / 2 with the quadratic/linear
    # huber split at eps/n; the derivative is continuous (no kink)
    def g(t):
        hub = t / eps if abs(t) <= eps / n else (1.0 if t > 0 else -1.0) / n
        return hub + sig * (t - eta)

    r = abs(eta) + 1.0
    return bisect_root(g, -r, r)


def prox_oracle_vartheta(s, a, lam, rho, c):
    # objective lam |t| - (lam/rho) psi(rho |t|) + c (t - s)^2 / 2 with psi
    # the piecewise conjugate; strictly convex for c above the
    # concavity bound, kinked only at zero
    if s == 0.0 or c * abs(s) <= lam:
        return 0.0
    tau = abs(s)
    sgn = 1.0 if s > 0 else -1.0

    def psi_prime(u):
        return min(1.0, max(0.0, ((a + 1.0) * u - 2.0) / (2.0 * (a - 1.0))))

    def g(t):
        return lam * (1.0 - psi_prime(rho * t)) + c * (t - tau)

    return sgn * bisect_root(g, 0.0, tau + lam / c + 1.0)


def central_diff(f, x, h=1e-6):
    """Central finite-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def central_diff_scalar(f, t, h=1e-6):
    return (f(t + h) - f(t - h)) / (2.0 * h)


# --- independent reference solver for the inner subproblem ----------------
#
# minimize (1/n)||z||_1 + ||omega . x||_1 + (mu/2)||x||^2
#          + (g1/2)||x - xr||^2 + (g2/2)||z - zr||^2   s.t.  A x - z = b
#
# Douglas-Rachford splitting between the separable block (closed-form prox,
# written out here from scratch) and the affine constraint (exact projection
# via a prefactorized system).  Strong convexity makes the fixed point unique.


def _soft(v, thr):
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def _prox_separable(x, z, xr, zr, omega, mu, g1, g2, n, step):
    # prox_{step * F1} at (x, z) with
    # F1 = ||omega . x||_1 + mu/2||x||^2 + g1/2||x-xr||^2  (+ z-part alike).
    # Quadratics fold into a single center and curvature per block.
    cx = (x / step + g1 * xr) / (1.0 / step + g1 + mu)
    wx = omega / (1.0 / step + g1 + mu)
    px = _soft(cx, wx)
    cz = (z / step + g2 * zr) / (1.0 / step + g2)
    wz = (1.0 / n) / (1.0 / step + g2)
    pz = _soft(cz, wz)
    return px, pz


def reference_subproblem(A, b, xr, zr, omega, mu, g1, g2,
                         max_iter=100000, tol=1e-13, step=1.0):
    """Slow, independent solve of the inner subproblem (see module docstring).

    Iterates Douglas-Rachford to a fixed point; returns (x, z).
    """
    A = np.asarray(A, float)
    n, p = A.shape
    # Projection onto {(x, z): A x - z = b}: correction through (A A^T + I).
    M = A @ A.T + np.eye(n)
    MInv = np.linalg.inv(M)

    def project(x, z):
        nu = MInv @ (A @ x - z - b)
        return x - A.T @ nu, z + nu

    ux, uz = xr.copy(), zr.copy()
    x_prev = None
    for _ in range(max_iter):
        px, pz = _prox_separable(ux, uz, xr, zr, omega, mu, g1, g2, n, step)
        rx, rz = project(2.0 * px - ux, 2.0 * pz - uz)
        ux = ux + rx - px
        uz = uz + rz - pz
        if x_prev is not None and np.max(np.abs(px - x_prev)) <= tol:
            break
        x_prev = px.copy()
    px, pz = _prox_separable(ux, uz, xr, zr, omega, mu, g1, g2, n, step)
    return project(px, pz)


def reference_lad_ridge(A, b, mu, max_iter=200000, tol=1e-13):
    """Independent minimizer of (1/n)||A y - b||_1 + (mu/2)||y||^2 over a
    (small) subset of columns, by the same splitting with no l1 term on y
    and no proximal centers.

    Used by the support-enumeration oracle; returns (y, value).
    """
    A = np.asarray(A, float)
    n, p = A.shape
    M = A @ A.T + np.eye(n)
    MInv = np.linalg.inv(M)

    def project(x, z):
        nu = MInv @ (A @ x - z - b)
        return x - A.T @ nu, z + nu

    step = 1.0
    ux = np.zeros(p)
    uz = -b.copy()
    x_prev = None
    for _ in range(max_iter):
        px = ux / (1.0 + step * mu)
        pz = _soft(uz, step / n)
        rx, rz = project(2.0 * px - ux, 2.0 * pz - uz)
        ux = ux + rx - px
        uz = uz + rz - pz
        if x_prev is not None and np.max(np.abs(px - x_prev)) <= tol:
            break
        x_prev = px.copy()
    px = ux / (1.0 + step * mu)
    pz = _soft(uz, step / n)
    x, z = project(px, pz)
    value = np.abs(A @ x - b).sum() / n + 0.5 * mu * float(x @ x)
    return x, value


def enumerate_zero_norm_min(A, b, mu, nu):
    """Global minimum of (1/n)||A x - b||_1 + (mu/2)||x||^2 + nu ||x||_0 by
    brute force over all supports (use only for p <= ~12)."""
    n, p = A.shape
    best = np.abs(b).sum() / n  # empty support
    for mask in range(1, 1 << p):
        cols = [j for j in range(p) if mask >> j & 1]
        _, val = reference_lad_ridge(A[:, cols], b, mu)
        best = min(best, val + nu * len(cols))
    return best


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
