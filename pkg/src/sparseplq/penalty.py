"""Surrogate-penalty scalar functions, their derivatives, vectorized
objective evaluators, and the closed-form proximal operators shared by the
two solvers.

All operations are pure; scalar arguments return Python floats, array
arguments return arrays of the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .problem import ProblemInstance, l1_loss


@dataclass(frozen=True)
class PenaltyParams:
    """Constants of the concave-capped l1 penalty.

    a > 1 is the shape constant, lam > 0 the penalty weight, rho >= 1 the
    scale; nu = lam / rho is the per-coordinate cost of a (large) nonzero.
    """

    a: float
    lam: float
    rho: float
    nu: float = field(init=False)

    def __post_init__(self):
        if not self.a > 1:
            raise ValueError("a must be > 1")
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if not self.rho >= 1:
            raise ValueError("rho must be >= 1")
        object.__setattr__(self, "nu", self.lam / self.rho)

    @property
    def t_lo(self) -> float:
        """Below this magnitude the penalty is exactly lam * |t|."""
        return 2.0 / (self.rho * (self.a + 1.0))

    @property
    def t_hi(self) -> float:
        """At or above this magnitude the penalty saturates at nu."""
        return 2.0 * self.a / (self.rho * (self.a + 1.0))


def _as_float_or_array(x, out):
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def phi(t, a):
    """((a-1) t^2 + 2 t) / (a + 1); equals 0 at t=0 and 1 at t=1."""
    t = np.asarray(t, dtype=float)
    out = ((a - 1.0) * t * t + 2.0 * t) / (a + 1.0)
    return _as_float_or_array(t, out)


def psi_star(s, a):
    """Convex conjugate of phi restricted to [0, 1], evaluated piecewise.

    Zero up to 2/(a+1), quadratic up to 2a/(a+1), then s - 1.  The three
    branches agree at the breakpoints (the function is C^1).
    """
    s_arr = np.asarray(s, dtype=float)
    lo = 2.0 / (a + 1.0)
    hi = 2.0 * a / (a + 1.0)
    q = (a + 1.0) * s_arr - 2.0
    mid = q * q / (4.0 * (a * a - 1.0))
    out = np.where(s_arr <= lo, 0.0, np.where(s_arr <= hi, mid, s_arr - 1.0))
    return _as_float_or_array(s, out)


def psi_star_prime(s, a):
    """Derivative of psi_star: ((a+1)s - 2) / (2(a-1)) clamped to [0, 1]."""
    s_arr = np.asarray(s, dtype=float)
    out = np.minimum(1.0, np.maximum(0.0, ((a + 1.0) * s_arr - 2.0) / (2.0 * (a - 1.0))))
    return _as_float_or_array(s, out)


def w_rho(x, params: PenaltyParams):
    """Componentwise psi_star_prime(rho |x_i|); zero wherever x_i = 0."""
    x_arr = np.asarray(x, dtype=float)
    out = psi_star_prime(params.rho * np.abs(x_arr), params.a)
    return _as_float_or_array(x, out)


def varphi_rho_prime(t, params: PenaltyParams):
    """Derivative of t -> psi_star(rho |t|), written per branch.

    Branch selection is done on s = rho |t| with the same comparisons as
    psi_star_prime, so the two routes pick identical branches.
    """
    a, rho = params.a, params.rho
    t_arr = np.asarray(t, dtype=float)
    s = rho * np.abs(t_arr)
    sgn = np.sign(t_arr)
    lo = 2.0 / (a + 1.0)
    hi = 2.0 * a / (a + 1.0)
    mid = rho * ((a + 1.0) * s - 2.0) * sgn / (2.0 * (a - 1.0))
    out = np.where(s <= lo, 0.0, np.where(s <= hi, mid, rho * sgn))
    return _as_float_or_array(t, out)


def g_rho(x, params: PenaltyParams) -> float:
    """(1/rho) * sum_i psi_star(rho |x_i|), the smooth concave-cap term."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(psi_star(params.rho * np.abs(x), params.a)) / params.rho)


def grad_g_rho(x, params: PenaltyParams):
    """Gradient of g_rho: exactly w_rho(x) * sign(x) componentwise."""
    x_arr = np.asarray(x, dtype=float)
    out = w_rho(x_arr, params) * np.sign(x_arr)
    return _as_float_or_array(x, out)


def surrogate_penalty(t, params: PenaltyParams):
    """Per-coordinate penalty lam |t| - (lam/rho) psi_star(rho |t|).

    Equals lam |t| below t_lo, saturates at exactly nu for |t| >= t_hi (the
    saturated branch returns nu directly, which the algebra reduces to), and
    interpolates smoothly in between.
    """
    a, lam, rho = params.a, params.lam, params.rho
    t_arr = np.asarray(t, dtype=float)
    s = rho * np.abs(t_arr)
    lo = 2.0 / (a + 1.0)
    hi = 2.0 * a / (a + 1.0)
    q = (a + 1.0) * s - 2.0
    mid = lam * np.abs(t_arr) - (lam / rho) * (q * q / (4.0 * (a * a - 1.0)))
    out = np.where(s <= lo, lam * np.abs(t_arr), np.where(s <= hi, mid, params.nu))
    return _as_float_or_array(t, out)


def theta_objective(x, inst: ProblemInstance, params: PenaltyParams) -> float:
    """Surrogate objective: loss + ridge + summed surrogate penalty."""
    x = np.asarray(x, dtype=float)
    r = inst.A @ x - inst.b
    return (
        l1_loss(r)
        + 0.5 * inst.mu * float(x @ x)
        + float(np.sum(surrogate_penalty(x, params)))
    )


def zero_norm_objective(x, inst: ProblemInstance, nu: float) -> float:
    """Loss + ridge + nu * (number of exactly-nonzero entries)."""
    x = np.asarray(x, dtype=float)
    r = inst.A @ x - inst.b
    return l1_loss(r) + 0.5 * inst.mu * float(x @ x) + nu * int(np.count_nonzero(x))


def prox_weighted_l1_ridge(z, omega, mu, gamma):
    """Exact minimizer of ||omega . x||_1 + (mu/2)||x||^2 + (gamma/2)||x - z||^2.

    Componentwise (gamma/(gamma+mu)) sign(z) max(|z| - omega/gamma, 0).
    """
    z_arr = np.asarray(z, dtype=float)
    omega = np.asarray(omega, dtype=float)
    out = (gamma / (gamma + mu)) * np.sign(z_arr) * np.maximum(
        np.abs(z_arr) - omega / gamma, 0.0
    )
    return _as_float_or_array(z, out)


def prox_l1_scaled(v, n, gamma2):
    """Prox of the averaged absolute loss: soft threshold at 1/(n gamma2)."""
    v_arr = np.asarray(v, dtype=float)
    thr = 1.0 / (n * gamma2)
    out = np.sign(v_arr) * np.maximum(np.abs(v_arr) - thr, 0.0)
    return _as_float_or_array(v, out)


def moreau_l1(z, eps, n) -> float:
    """Moreau envelope of the averaged absolute loss at parameter eps.

    Componentwise Huber value: |t|/n - eps/(2 n^2) beyond eps/n, else
    t^2/(2 eps); always within eps/(2n) below the exact loss.
    """
    z = np.asarray(z, dtype=float)
    az = np.abs(z)
    out = np.where(az > eps / n, az / n - eps / (2.0 * n * n), z * z / (2.0 * eps))
    return float(np.sum(out))


def prox_moreau_l1(eta, eps, sigma, n):
    """Componentwise minimizer of the Huber-smoothed averaged absolute loss
    plus (sigma/2)(t - eta)^2."""
    eta_arr = np.asarray(eta, dtype=float)
    thr = (1.0 + sigma * eps) / (n * sigma)
    linear = eta_arr - np.sign(eta_arr) / (n * sigma)
    quad = sigma * eps * eta_arr / (1.0 + sigma * eps)
    out = np.where(np.abs(eta_arr) > thr, linear, quad)
    return _as_float_or_array(eta, out)


def vartheta_curvature_bound(params: PenaltyParams) -> float:
    """Largest concavity of the surrogate penalty; prox_vartheta needs a
    quadratic stiffness strictly above this."""
    return params.lam * (params.a + 1.0) * params.rho / (2.0 * (params.a - 1.0))


def prox_vartheta(s, params: PenaltyParams, c):
    """Global minimizer of surrogate_penalty(t) + (c/2)(t - s)^2, componentwise.

    The stationary candidate of each branch (on the sign(s) side) is clipped
    to its branch and compared with t=0 and the two breakpoints; the argmin
    wins, with exact ties resolved toward the smaller magnitude.  Requires
    c > lam (a+1) rho / (2 (a-1)) so every branch problem is strictly convex.
    """
    a, lam, rho = params.a, params.lam, params.rho
    cap = vartheta_curvature_bound(params)
    if not c > cap:
        raise ValueError(
            f"prox_vartheta needs c > {cap:g} (got {c:g}); the scalar "
            "subproblems are not strictly convex"
        )
    s_arr = np.asarray(s, dtype=float)
    flat = np.atleast_1d(s_arr).ravel()
    sgn = np.sign(flat)
    r = np.abs(flat)
    t_lo, t_hi = params.t_lo, params.t_hi
    cand_low = np.clip(r - lam / c, 0.0, t_lo)
    cand_mid = np.clip((c * r - lam * a / (a - 1.0)) / (c - cap), t_lo, t_hi)
    cand_high = np.maximum(r, t_hi)
    # Rows are ascending in t, so argmin's first-occurrence rule breaks exact
    # ties toward the smaller magnitude.
    cands = np.stack(
        [
            np.zeros_like(r),
            cand_low,
            np.full_like(r, t_lo),
            cand_mid,
            np.full_like(r, t_hi),
            cand_high,
        ]
    )
    obj = surrogate_penalty(cands, params) + 0.5 * c * (cands - r) ** 2
    t = cands[np.argmin(obj, axis=0), np.arange(r.size)]
    out = (sgn * t).reshape(np.shape(s_arr)) if s_arr.ndim else sgn[0] * t[0]
    return _as_float_or_array(s, out)


class LocalOptCheck(NamedTuple):
    ok: bool
    min_nonzero: float
    threshold: float


def check_local_opt_condition(x, params: PenaltyParams) -> LocalOptCheck:
    """True iff every exactly-nonzero entry exceeds the saturation magnitude
    t_hi (vacuously true for the zero vector).

    Critical points satisfying this are local minimizers of both the
    surrogate and the zero-norm objective.
    """
    x = np.asarray(x, dtype=float)
    nz = np.abs(x[x != 0.0])
    min_nz = float(nz.min()) if nz.size else float("inf")
    return LocalOptCheck(bool(min_nz > params.t_hi), min_nz, params.t_hi)
