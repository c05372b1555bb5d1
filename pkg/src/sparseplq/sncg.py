"""Matrix-free dual semismooth Newton-CG solver for the strongly convex
inner subproblems.

Each subproblem minimizes, over A x - z = b,

    f(z) + ||omega . x||_1 + (mu/2)||x||^2
        + (gamma1/2)||x - x_ref||^2 + (gamma2/2)||z - z_ref||^2

with f the averaged absolute loss.  The (smooth, convex) dual in u is driven
to a root of its gradient by a semismooth Newton method whose generalized
Jacobian is diagonal-plus-low-rank and is only ever applied to vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .penalty import prox_l1_scaled, prox_weighted_l1_ridge
from .problem import ProblemInstance, l1_loss


@dataclass(frozen=True)
class SubproblemSpec:
    """One inner convex problem: proximal centers, weights and moduli."""

    inst: ProblemInstance
    x_ref: np.ndarray
    z_ref: np.ndarray
    omega: np.ndarray
    mu: float
    gamma1: float
    gamma2: float

    def __post_init__(self):
        x_ref = np.asarray(self.x_ref, dtype=float)
        z_ref = np.asarray(self.z_ref, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        if x_ref.shape != (self.inst.p,):
            raise ValueError("x_ref has wrong length")
        if z_ref.shape != (self.inst.n,):
            raise ValueError("z_ref has wrong length")
        if omega.shape != (self.inst.p,):
            raise ValueError("omega has wrong length")
        if np.any(omega < 0):
            raise ValueError("omega must be nonnegative")
        if not (self.gamma1 > 0 and self.gamma2 > 0):
            raise ValueError("gamma1 and gamma2 must be positive")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        object.__setattr__(self, "x_ref", x_ref)
        object.__setattr__(self, "z_ref", z_ref)
        object.__setattr__(self, "omega", omega)


@dataclass(frozen=True)
class SNCGConfig:
    tau_bar: float = 0.1
    eta_bar: float = 0.1
    delta: float = 0.5
    armijo_c: float = 1e-4
    j_max: int = 50
    eps_sncg: float = 1e-6
    cg_max: int = 300
    backtrack_max: int = 30

    def __post_init__(self):
        if not 0 < self.tau_bar < 1:
            raise ValueError("tau_bar must be in (0, 1)")
        if not 0 < self.eta_bar < 1:
            raise ValueError("eta_bar must be in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if not 0 < self.armijo_c < 0.5:
            raise ValueError("armijo_c must be in (0, 0.5)")
        if self.eps_sncg <= 0:
            raise ValueError("eps_sncg must be positive")


def _dual_shift(spec: SubproblemSpec) -> np.ndarray:
    # Constant aligning the dual value with its gradient; vanishes for the
    # outer-loop subproblems where z_ref = A x_ref - b.
    return spec.z_ref - spec.inst.A @ spec.x_ref + spec.inst.b


def _h_value(x, spec: SubproblemSpec) -> float:
    return float(spec.omega @ np.abs(x) + 0.5 * spec.mu * (x @ x))


def _eval_envelopes(u, atu, spec: SubproblemSpec):
    """Prox points and Moreau envelope values of both separable blocks."""
    n = spec.inst.n
    v = spec.z_ref + u / spec.gamma2
    pz = prox_l1_scaled(v, n, spec.gamma2)
    ef = l1_loss(pz) + 0.5 * spec.gamma2 * float(np.sum((pz - v) ** 2))
    wv = spec.x_ref - atu / spec.gamma1
    px = prox_weighted_l1_ridge(wv, spec.omega, spec.mu, spec.gamma1)
    eh = _h_value(px, spec) + 0.5 * spec.gamma1 * float(np.sum((px - wv) ** 2))
    return v, pz, ef, wv, px, eh


def _psi_from_parts(u, atu, ef, eh, shift, spec: SubproblemSpec) -> float:
    return (
        0.5 * float(u @ u) / spec.gamma2
        - ef
        - eh
        + 0.5 * float(atu @ atu) / spec.gamma1
        + float(u @ shift)
    )


def dual_value(u, spec: SubproblemSpec) -> float:
    """Negative dual function at u (to be minimized); consistent with
    dual_gradient as a function/gradient pair for any reference pair."""
    u = np.asarray(u, dtype=float)
    atu = spec.inst.A.T @ u
    _, _, ef, _, _, eh = _eval_envelopes(u, atu, spec)
    return _psi_from_parts(u, atu, ef, eh, _dual_shift(spec), spec)


def dual_gradient(u, spec: SubproblemSpec) -> np.ndarray:
    """Gradient of dual_value: prox(z side) - A prox(x side) + b.

    A root is a dual optimum; the recovered prox pair is then primal optimal.
    """
    u = np.asarray(u, dtype=float)
    atu = spec.inst.A.T @ u
    _, pz, _, _, px, _ = _eval_envelopes(u, atu, spec)
    return pz - spec.inst.A @ px + spec.inst.b


def jacobian_diagonals(u, spec: SubproblemSpec):
    """Diagonals (udiag, vdiag) of one generalized-Jacobian element.

    udiag selects 1 where the z-side prox is strictly beyond its kink,
    vdiag selects gamma1/(gamma1+mu) where the x-side prox is strictly
    active; the zero endpoint is chosen at kinks (sparser, still PSD).
    """
    u = np.asarray(u, dtype=float)
    n = spec.inst.n
    atu = spec.inst.A.T @ u
    v = spec.z_ref + u / spec.gamma2
    udiag = (np.abs(v) > 1.0 / (n * spec.gamma2)).astype(float)
    vdiag = np.where(
        np.abs(spec.gamma1 * spec.x_ref - atu) > spec.omega,
        spec.gamma1 / (spec.gamma1 + spec.mu),
        0.0,
    )
    return udiag, vdiag


def apply_W(d, diags, spec: SubproblemSpec) -> np.ndarray:
    """Matrix-free product with W = udiag/gamma2 + A diag(vdiag) A^T / gamma1."""
    udiag, vdiag = diags
    d = np.asarray(d, dtype=float)
    A = spec.inst.A
    return (udiag * d) / spec.gamma2 + A @ (vdiag * (A.T @ d)) / spec.gamma1


def _matvec_on_support(A, x):
    # A @ x exploiting sparsity of x; the column gather pays off once the
    # support is a small fraction of p at large sizes.
    nz = np.flatnonzero(x)
    if x.size >= 512 and nz.size <= x.size // 4:
        return A[:, nz] @ x[nz]
    return A @ x


def cg_solve(spec: SubproblemSpec, diags, tau, rhs, target, cg_max):
    """Conjugate gradients on (W + tau I) d = rhs from d = 0.

    Stops once the system residual norm is at or below ``target``.  Returns
    (d, A^T d, iterations, converged); starting from zero keeps every iterate
    a descent direction for the dual even on early exit.

    Only the active columns of A (where vdiag is nonzero) enter W, so the
    iteration works on that column block when it is small.
    """
    udiag, vdiag = diags
    A = spec.inst.A
    p = spec.inst.p
    g1, g2 = spec.gamma1, spec.gamma2
    d = np.zeros_like(rhs)
    r = rhs.copy()
    rs = float(r @ r)
    if np.sqrt(rs) <= target:
        return d, np.zeros(p), 0, True
    active = np.flatnonzero(vdiag)
    use_sub = p >= 512 and active.size <= p // 2
    if use_sub:
        Asub = np.ascontiguousarray(A[:, active])
        vsub = vdiag[active]
    atd = None if use_sub else np.zeros(p)
    pvec = r.copy()
    converged = False
    it = 0
    for it in range(1, cg_max + 1):
        if use_sub:
            atp = Asub.T @ pvec
            wp = (udiag * pvec) / g2 + Asub @ (vsub * atp) / g1 + tau * pvec
        else:
            atp = A.T @ pvec
            wp = (udiag * pvec) / g2 + A @ (vdiag * atp) / g1 + tau * pvec
        denom = float(pvec @ wp)
        if denom <= 0:
            break
        alpha = rs / denom
        d += alpha * pvec
        if atd is not None:
            atd += alpha * atp
        r -= alpha * wp
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= target:
            converged = True
            break
        pvec = r + (rs_new / rs) * pvec
        rs = rs_new
    if atd is None:
        atd = A.T @ d
    return d, atd, it, converged


@dataclass
class SubproblemResult:
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    gap: float
    grad_norm: float
    iters: int
    status: str  # "converged", "max_iters" or "stalled"
    cg_failures: int = 0
    psi_trace: Optional[list] = None


def solve_subproblem(
    spec: SubproblemSpec, cfg: SNCGConfig, u_init=None
) -> SubproblemResult:
    """Run the Newton-CG loop until the scaled gradient norm and duality gap
    both fall below cfg.eps_sncg, or j_max iterations.

    The primal pair is recovered from the two prox maps at the final dual
    iterate.  A failed line search returns the current iterate with status
    "stalled"; the caller's outer tolerances absorb it.
    """
    A = spec.inst.A
    b = spec.inst.b
    n, p = spec.inst.n, spec.inst.p
    shift = _dual_shift(spec)
    bscale = 1.0 + float(np.linalg.norm(b))

    if u_init is None:
        u = np.zeros(n)
        atu = np.zeros(p)
    else:
        u = np.array(u_init, dtype=float)
        atu = A.T @ u

    def full_state(u, atu):
        v, pz, ef, wv, px, eh = _eval_envelopes(u, atu, spec)
        psi = _psi_from_parts(u, atu, ef, eh, shift, spec)
        phi = pz - _matvec_on_support(A, px) + b
        # Exact duality gap: primal value of the recovered pair minus the
        # dual bound collapses to <u, phi> (equivalently
        # <pz - z_ref, u> + <x_ref - px, A^T u> plus the shift term).
        gap = float(u @ phi)
        return v, pz, px, psi, phi, gap

    v, pz, px, psi, phi, gap = full_state(u, atu)
    status = "max_iters"
    iters = 0
    cg_failures = 0
    psi_trace = [psi]
    for j in range(cfg.j_max):
        phi_norm = float(np.linalg.norm(phi))
        if phi_norm / bscale <= cfg.eps_sncg and abs(gap) / bscale <= cfg.eps_sncg:
            status = "converged"
            break
        iters = j + 1
        udiag = (np.abs(v) > 1.0 / (n * spec.gamma2)).astype(float)
        vdiag = np.where(
            np.abs(spec.gamma1 * spec.x_ref - atu) > spec.omega,
            spec.gamma1 / (spec.gamma1 + spec.mu),
            0.0,
        )
        tau = min(cfg.tau_bar, phi_norm)
        target = min(cfg.eta_bar, phi_norm**1.1)
        d, atd, _, cg_ok = cg_solve(
            spec, (udiag, vdiag), tau, -phi, target, cfg.cg_max
        )
        if not cg_ok:
            cg_failures += 1
        slope = float(phi @ d)
        if slope >= 0.0:
            # Degenerate CG output; fall back to the steepest descent direction.
            d = -phi
            atd = -(A.T @ phi)
            slope = -phi_norm * phi_norm
        alpha = 1.0
        accepted = False
        trials = []
        for _ in range(cfg.backtrack_max):
            u_try = u + alpha * d
            atu_try = atu + alpha * atd
            _, _, ef_t, _, _, eh_t = _eval_envelopes(u_try, atu_try, spec)
            psi_try = _psi_from_parts(u_try, atu_try, ef_t, eh_t, shift, spec)
            if psi_try <= psi + cfg.armijo_c * alpha * slope:
                accepted = True
                break
            trials.append((psi_try, u_try, atu_try))
            alpha *= cfg.delta
        if not accepted:
            # Near the rounding floor of the dual the sufficient-decrease
            # test is noise; accept a non-increasing (to noise) trial, full
            # step first so the fast local phase can still finish.
            noise = 1e-14 * (1.0 + abs(psi))
            for psi_try, cand_u, cand_atu in (trials[0], trials[-1]):
                if psi_try <= psi + noise:
                    u_try, atu_try = cand_u, cand_atu
                    accepted = True
                    break
        if not accepted:
            status = "stalled"
            break
        u, atu = u_try, atu_try
        v, pz, px, psi, phi, gap = full_state(u, atu)
        psi_trace.append(psi)

    return SubproblemResult(
        x=px,
        z=pz,
        u=u,
        gap=gap,
        grad_norm=float(np.linalg.norm(phi)),
        iters=iters,
        status=status,
        cg_failures=cg_failures,
        psi_trace=psi_trace,
    )
