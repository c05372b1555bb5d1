"""Indefinite-proximal ADMM on the smoothed surrogate, the comparison
baseline.

The averaged absolute loss is replaced by its Moreau envelope at a user
chosen smoothing parameter eps_smooth; the x-update then needs only the
componentwise prox of the concave-capped penalty, at a stiffness chosen so
the indefinite proximal term cancels the coupling through A."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .metrics import nnz_approx
from .penalty import (
    PenaltyParams,
    check_local_opt_condition,
    moreau_l1,
    prox_moreau_l1,
    prox_vartheta,
    surrogate_penalty,
    vartheta_curvature_bound,
)
from .pmm import SolveReport
from .problem import ProblemInstance


@dataclass(frozen=True)
class ADMMConfig:
    eps_smooth: float
    sigma: Optional[float] = None  # defaults to 4.5 / eps_smooth
    k_max: int = 20000
    eps_admm: float = 1e-5
    keep_history: bool = False

    def __post_init__(self):
        if self.eps_smooth <= 0:
            raise ValueError("eps_smooth must be positive")
        sigma = self.sigma if self.sigma is not None else 4.5 / self.eps_smooth
        if not sigma > 2.0 * np.sqrt(2.0) / self.eps_smooth:
            raise ValueError(
                "sigma must exceed 2*sqrt(2)/eps_smooth for the augmented "
                "Lagrangian to be monotone"
            )
        object.__setattr__(self, "sigma", float(sigma))


def prox_curvature(inst: ProblemInstance, params: PenaltyParams, cfg: ADMMConfig):
    """Stiffness gamma = sigma ||A||^2 / 2 + lam (a+1) rho / (2(a-1)) - mu of
    the indefinite proximal term; checked once so every scalar x-subproblem
    is strictly convex."""
    gamma = (
        0.5 * cfg.sigma * inst.spec_norm_sq
        + vartheta_curvature_bound(params)
        - inst.mu
    )
    if not inst.mu + gamma > vartheta_curvature_bound(params):
        raise ValueError(
            "x-update prox is not strictly convex; A must be nonzero and sigma positive"
        )
    return gamma


def x_update(x_k, z_k, y_k, inst: ProblemInstance, params: PenaltyParams, cfg: ADMMConfig):
    """One x step: form the shifted point xi and apply the penalty prox at
    stiffness mu + gamma."""
    gamma = prox_curvature(inst, params, cfg)
    c = inst.mu + gamma
    sigma = cfg.sigma
    ax = inst.A @ np.asarray(x_k, float)
    xi = (gamma * x_k + sigma * (inst.A.T @ (z_k + inst.b - ax - y_k / sigma))) / c
    return prox_vartheta(xi, params, c)


def z_update(x_next, y_k, inst: ProblemInstance, cfg: ADMMConfig):
    """One z step: prox of the smoothed loss at the shifted residual."""
    eta = inst.A @ np.asarray(x_next, float) - inst.b + y_k / cfg.sigma
    return prox_moreau_l1(eta, cfg.eps_smooth, cfg.sigma, inst.n)


def aug_lagrangian(x, z, y, inst: ProblemInstance, params: PenaltyParams, cfg: ADMMConfig):
    """Augmented Lagrangian of the smoothed problem at (x, z; y)."""
    x = np.asarray(x, float)
    z = np.asarray(z, float)
    y = np.asarray(y, float)
    r = inst.A @ x - inst.b - z
    return (
        moreau_l1(z, cfg.eps_smooth, inst.n)
        + 0.5 * inst.mu * float(x @ x)
        + float(np.sum(surrogate_penalty(x, params)))
        + float(y @ r)
        + 0.5 * cfg.sigma * float(r @ r)
    )


def admm_solve(
    inst: ProblemInstance,
    params: PenaltyParams,
    cfg: ADMMConfig,
    start=None,
) -> SolveReport:
    """Loop x-prox / z-prox / multiplier ascent until both scaled residuals
    fall below cfg.eps_admm or k_max steps.

    ``start`` is a triple (x0, z0, y0); when omitted, z0 = A x0 - b and
    y0 = 0 are derived from x0 = 0.  The report's objective trace holds the
    augmented Lagrangian after each step.
    """
    t0 = time.perf_counter()
    A, b = inst.A, inst.b
    n, p = inst.n, inst.p
    sigma = cfg.sigma
    eps = cfg.eps_smooth
    gamma = prox_curvature(inst, params, cfg)
    c = inst.mu + gamma
    bscale = 1.0 + float(np.linalg.norm(b))

    if start is None:
        x = np.zeros(p)
        z = A @ x - b
        y = np.zeros(n)
    else:
        x = np.array(start[0], dtype=float)
        z = np.array(start[1], dtype=float)
        y = np.array(start[2], dtype=float)
        if x.shape != (p,) or z.shape != (n,) or y.shape != (n,):
            raise ValueError("start vectors have wrong lengths")

    # Per-step descent constants for the augmented-Lagrangian trace.
    dcoef_z = 0.5 * sigma - 4.0 / (sigma * eps * eps)
    dcoef_x = (params.lam * (params.a + 1.0) * params.rho - 2.0 * (params.a - 1.0) * inst.mu) / (
        4.0 * (params.a - 1.0)
    )

    ax = A @ x
    r = ax - z - b
    atr = A.T @ r
    lag = (
        moreau_l1(z, eps, n)
        + 0.5 * inst.mu * float(x @ x)
        + float(np.sum(surrogate_penalty(x, params)))
        + float(y @ r)
        + 0.5 * sigma * float(r @ r)
    )
    obj = [lag]
    errs = []
    nzs = [nnz_approx(x)]
    dgaps, dx_sqs, dz_sqs = [], [], []
    history = [x.copy()] if cfg.keep_history else None

    termination = "max_iters"
    iterations = 0
    for k in range(cfg.k_max):
        xi = (gamma * x + sigma * (A.T @ (z + b - ax - y / sigma))) / c
        x_new = prox_vartheta(xi, params, c)
        ax_new = A @ x_new
        eta = ax_new - b + y / sigma
        z_new = prox_moreau_l1(eta, eps, sigma, n)
        r_new = ax_new - z_new - b
        y_new = y + sigma * r_new

        atr_new = A.T @ r_new
        # ||y_new - y|| / (sigma (1 + ||b||)) reduces to the primal residual.
        pinf = float(np.linalg.norm(r_new)) / bscale
        dinf = (
            float(np.linalg.norm(sigma * atr_new - sigma * atr - gamma * (x_new - x)))
            / bscale
        )
        lag_new = (
            moreau_l1(z_new, eps, n)
            + 0.5 * inst.mu * float(x_new @ x_new)
            + float(np.sum(surrogate_penalty(x_new, params)))
            + float(y_new @ r_new)
            + 0.5 * sigma * float(r_new @ r_new)
        )
        dx_sq = float(np.sum((x_new - x) ** 2))
        dz_sq = float(np.sum((z_new - z) ** 2))
        dgap = lag - lag_new - dcoef_z * dz_sq - dcoef_x * dx_sq

        iterations = k + 1
        obj.append(lag_new)
        errs.append(max(pinf, dinf))
        nzs.append(nnz_approx(x_new))
        dgaps.append(dgap)
        dx_sqs.append(dx_sq)
        dz_sqs.append(dz_sq)
        if history is not None:
            history.append(x_new.copy())

        x, z, y, ax, atr, lag = x_new, z_new, y_new, ax_new, atr_new, lag_new
        if max(pinf, dinf) <= cfg.eps_admm:
            termination = "residual_tol"
            break

    return SolveReport(
        x=x,
        obj_trace=np.asarray(obj),
        err_trace=np.asarray(errs),
        nz_trace=np.asarray(nzs),
        iterations=iterations,
        wall_time=time.perf_counter() - t0,
        termination=termination,
        local_opt=check_local_opt_condition(x, params),
        solver="ipadmm",
        descent_gap_trace=np.asarray(dgaps),
        step_x_sq=np.asarray(dx_sqs),
        step_z_sq=np.asarray(dz_sqs),
        history=history,
        params=params,
    )
