import numpy as np
import pytest

from conftest import reference_subproblem
from sparseplq.penalty import prox_l1_scaled, prox_weighted_l1_ridge
from sparseplq.problem import ProblemInstance, l1_loss
from sparseplq.sncg import (
    SNCGConfig,
    SubproblemSpec,
    apply_W,
    cg_solve,
    dual_gradient,
    dual_value,
    jacobian_diagonals,
    solve_subproblem,
)


def _random_spec(rng, n=6, p=4, mu=0.05, g1=0.3, g2=0.5, centered=True):
    A = rng.standard_normal((n, p))
    b = rng.standard_normal(n)
    inst = ProblemInstance(A, b, mu=mu)
    x_ref = rng.standard_normal(p)
    z_ref = A @ x_ref - b if centered else rng.standard_normal(n)
    omega = rng.uniform(0.05, 0.8, size=p)
    return SubproblemSpec(
        inst=inst, x_ref=x_ref, z_ref=z_ref, omega=omega, mu=mu, gamma1=g1, gamma2=g2
    )


def _primal_value(x, z, spec):
    return (
        l1_loss(z)
        + float(spec.omega @ np.abs(x))
        + 0.5 * spec.mu * float(x @ x)
        + 0.5 * spec.gamma1 * float(np.sum((x - spec.x_ref) ** 2))
        + 0.5 * spec.gamma2 * float(np.sum((z - spec.z_ref) ** 2))
    )


def test_config_validation():
    with pytest.raises(ValueError):
        SNCGConfig(armijo_c=0.7)
    with pytest.raises(ValueError):
        SNCGConfig(delta=1.0)


def test_dual_value_at_zero(rng):
    spec = _random_spec(rng)
    n = spec.inst.n
    v = spec.z_ref
    pz = prox_l1_scaled(v, n, spec.gamma2)
    ef = l1_loss(pz) + 0.5 * spec.gamma2 * np.sum((pz - v) ** 2)
    px = prox_weighted_l1_ridge(spec.x_ref, spec.omega, spec.mu, spec.gamma1)
    eh = (
        spec.omega @ np.abs(px)
        + 0.5 * spec.mu * px @ px
        + 0.5 * spec.gamma1 * np.sum((px - spec.x_ref) ** 2)
    )
    assert dual_value(np.zeros(n), spec) == pytest.approx(-(ef + eh), rel=1e-13)


def test_dual_value_one_dim_assembled_from_prox(rng):
    A = np.array([[2.0]])
    inst = ProblemInstance(A, np.array([0.5]), mu=0.1)
    spec = SubproblemSpec(
        inst=inst,
        x_ref=np.array([0.3]),
        z_ref=np.array([0.1]),
        omega=np.array([0.2]),
        mu=0.1,
        gamma1=0.4,
        gamma2=0.6,
    )
    u = np.array([0.7])
    v = spec.z_ref + u / spec.gamma2
    pz = prox_l1_scaled(v, 1, spec.gamma2)
    ef = l1_loss(pz) + 0.5 * spec.gamma2 * np.sum((pz - v) ** 2)
    wv = spec.x_ref - A.T @ u / spec.gamma1
    px = prox_weighted_l1_ridge(wv, spec.omega, spec.mu, spec.gamma1)
    eh = (
        spec.omega @ np.abs(px)
        + 0.5 * spec.mu * px @ px
        + 0.5 * spec.gamma1 * np.sum((px - wv) ** 2)
    )
    shift = spec.z_ref - A @ spec.x_ref + inst.b
    expected = (
        0.5 * u @ u / spec.gamma2
        - ef
        - eh
        + 0.5 * (A.T @ u) @ (A.T @ u) / spec.gamma1
        + u @ shift
    )
    assert dual_value(u, spec) == pytest.approx(float(expected), rel=1e-13)


def _fd_gradient(spec, u, h=1e-6):
    g = np.zeros_like(u)
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = h
        g[i] = (dual_value(u + e, spec) - dual_value(u - e, spec)) / (2 * h)
    return g


def test_dual_gradient_matches_finite_differences(rng):
    for centered in (True, False):
        spec = _random_spec(rng, n=3, p=2, centered=centered)
        for _ in range(10):
            u = rng.standard_normal(3)
            fd = _fd_gradient(spec, u)
            np.testing.assert_allclose(dual_gradient(u, spec), fd, atol=1e-5)


def test_dual_gradient_decouples_when_A_zero(rng):
    inst = ProblemInstance(np.zeros((3, 2)), rng.standard_normal(3), mu=0.0)
    spec = SubproblemSpec(
        inst=inst,
        x_ref=rng.standard_normal(2),
        z_ref=rng.standard_normal(3),
        omega=np.ones(2),
        mu=0.0,
        gamma1=1.0,
        gamma2=2.0,
    )
    u = rng.standard_normal(3)
    expected = prox_l1_scaled(spec.z_ref + u / 2.0, 3, 2.0) + inst.b
    np.testing.assert_allclose(dual_gradient(u, spec), expected, rtol=1e-14)


def test_jacobian_diagonals_below_threshold(rng):
    spec = _random_spec(rng, n=4, p=3)
    # huge gamma2 threshold is impossible; instead push z_ref + u/g2 tiny
    u = -spec.gamma2 * spec.z_ref
    udiag, _ = jacobian_diagonals(u, spec)
    assert np.all(udiag == 0.0)


def test_jacobian_matches_derivative_at_kink_free_point():
    A = np.array([[1.5]])
    inst = ProblemInstance(A, np.array([0.2]), mu=0.05)
    spec = SubproblemSpec(
        inst=inst,
        x_ref=np.array([1.0]),
        z_ref=np.array([2.0]),
        omega=np.array([0.1]),
        mu=0.05,
        gamma1=0.7,
        gamma2=0.9,
    )
    u = np.array([0.3])  # both prox arguments far from their kinks
    h = 1e-7
    fd = (dual_gradient(u + h, spec) - dual_gradient(u - h, spec)) / (2 * h)
    udiag, vdiag = jacobian_diagonals(u, spec)
    w = apply_W(np.ones(1), (udiag, vdiag), spec)
    assert w[0] == pytest.approx(fd[0], rel=1e-6)


def test_apply_W_basics(rng):
    spec = _random_spec(rng, n=5, p=3)
    diags = (np.ones(5), np.zeros(3))
    assert np.all(apply_W(np.zeros(5), diags, spec) == 0.0)
    d = rng.standard_normal(5)
    np.testing.assert_allclose(apply_W(d, diags, spec), d / spec.gamma2, rtol=1e-14)


def test_apply_W_matches_dense_assembly(rng):
    spec = _random_spec(rng, n=5, p=3)
    u = rng.standard_normal(5)
    udiag, vdiag = jacobian_diagonals(u, spec)
    A = spec.inst.A
    W = np.diag(udiag) / spec.gamma2 + A @ np.diag(vdiag) @ A.T / spec.gamma1
    d = rng.standard_normal(5)
    np.testing.assert_allclose(apply_W(d, (udiag, vdiag), spec), W @ d, atol=1e-12)
    # PSD: random quadratic forms are nonnegative
    for _ in range(20):
        q = rng.standard_normal(5)
        assert q @ apply_W(q, (udiag, vdiag), spec) >= -1e-12


def test_cg_identity_system(rng):
    spec = _random_spec(rng, n=4, p=3)
    rhs = rng.standard_normal(4)
    d, atd, iters, ok = cg_solve(spec, (np.zeros(4), np.zeros(3)), 1.0, rhs, 1e-12, 50)
    np.testing.assert_allclose(d, rhs, atol=1e-10)
    np.testing.assert_allclose(atd, spec.inst.A.T @ d, atol=1e-10)
    assert ok


def test_cg_diagonal_system(rng):
    spec = _random_spec(rng, n=4, p=3)
    udiag = np.array([1.0, 0.0, 1.0, 1.0])
    vdiag = np.zeros(3)
    tau = 0.05
    rhs = rng.standard_normal(4)
    d, _, _, ok = cg_solve(spec, (udiag, vdiag), tau, rhs, 1e-12, 100)
    expected = rhs / (udiag / spec.gamma2 + tau)
    np.testing.assert_allclose(d, expected, atol=1e-9)
    assert ok


def test_cg_matches_dense_solve(rng):
    spec = _random_spec(rng, n=6, p=4)
    u = rng.standard_normal(6)
    udiag, vdiag = jacobian_diagonals(u, spec)
    A = spec.inst.A
    tau = 0.03
    W = np.diag(udiag) / spec.gamma2 + A @ np.diag(vdiag) @ A.T / spec.gamma1
    rhs = rng.standard_normal(6)
    target = 1e-11
    d, _, _, ok = cg_solve(spec, (udiag, vdiag), tau, rhs, target, 200)
    assert ok
    assert np.linalg.norm((W + tau * np.eye(6)) @ d - rhs) <= target * 1.01
    np.testing.assert_allclose(d, np.linalg.solve(W + tau * np.eye(6), rhs), atol=1e-8)


def test_cg_cap_returns_best_with_flag(rng):
    spec = _random_spec(rng, n=8, p=6)
    u = rng.standard_normal(8)
    diags = jacobian_diagonals(u, spec)
    rhs = rng.standard_normal(8)
    d, _, iters, ok = cg_solve(spec, diags, 0.01, rhs, 1e-14, 1)
    assert iters == 1 and not ok
    assert np.any(d != 0.0)  # still a usable descent direction
    res = solve_subproblem(spec, SNCGConfig(eps_sncg=1e-8, cg_max=2, j_max=200))
    assert res.cg_failures > 0
    trace = np.asarray(res.psi_trace)
    assert np.all(np.diff(trace) <= 1e-12 * (1.0 + np.abs(trace[0])))


def test_solve_subproblem_identity_decoupled(rng):
    # A = I, omega = 0, mu = 0: the constrained problem decouples per
    # coordinate; compare against the scalar closed form computed by hand:
    # min_t (1/n)|t| + (g1/2)(t + b_i - xr_i)^2 + (g2/2)(t - zr_i)^2 over
    # z_i = t, x_i = t + b_i.
    n = 4
    b = rng.standard_normal(n)
    inst = ProblemInstance(np.eye(n), b, mu=0.0)
    x_ref = rng.standard_normal(n)
    z_ref = x_ref - b
    g1, g2 = 0.7, 0.4
    spec = SubproblemSpec(
        inst=inst, x_ref=x_ref, z_ref=z_ref, omega=np.zeros(n), mu=0.0,
        gamma1=g1, gamma2=g2,
    )
    res = solve_subproblem(spec, SNCGConfig(eps_sncg=1e-12))
    # z* minimizes (1/n)|z| + ((g1+g2)/2)(z - c)^2 with
    # c = (g1 (x_ref - b) + g2 z_ref)/(g1 + g2): a soft threshold.
    c = (g1 * (x_ref - b) + g2 * z_ref) / (g1 + g2)
    z_expected = np.sign(c) * np.maximum(np.abs(c) - 1.0 / (n * (g1 + g2)), 0.0)
    np.testing.assert_allclose(res.z, z_expected, atol=1e-9)
    np.testing.assert_allclose(res.x, z_expected + b, atol=1e-9)


def test_solve_subproblem_duality_certificate(rng):
    spec = _random_spec(rng, n=2, p=2)
    eps = 1e-9
    res = solve_subproblem(spec, SNCGConfig(eps_sncg=eps))
    assert res.status == "converged"
    bscale = 1.0 + np.linalg.norm(spec.inst.b)
    primal = _primal_value(res.x, res.z, spec)
    assert primal + dual_value(res.u, spec) <= 2 * eps * bscale
    assert res.grad_norm / bscale <= eps
    assert abs(res.gap) / bscale <= eps


def test_solve_subproblem_primal_feasibility(rng):
    for _ in range(5):
        spec = _random_spec(rng, n=7, p=5, centered=False)
        eps = 1e-8
        res = solve_subproblem(spec, SNCGConfig(eps_sncg=eps))
        bscale = 1.0 + np.linalg.norm(spec.inst.b)
        feas = np.linalg.norm(spec.inst.A @ res.x - res.z - spec.inst.b)
        assert feas == pytest.approx(res.grad_norm, rel=1e-10)
        assert feas / bscale <= 10 * eps


def test_solve_subproblem_warm_start_fixed_point(rng):
    spec = _random_spec(rng, n=5, p=4)
    cfg = SNCGConfig(eps_sncg=1e-10)
    first = solve_subproblem(spec, cfg)
    again = solve_subproblem(spec, cfg, u_init=first.u)
    assert again.iters <= 1


def test_solve_subproblem_descent(rng):
    spec = _random_spec(rng, n=8, p=6, centered=False)
    res = solve_subproblem(spec, SNCGConfig(eps_sncg=1e-10))
    trace = np.asarray(res.psi_trace)
    # slack at the rounding floor of the dual value (full steps are taken
    # untested once the predicted decrease is below float resolution)
    assert np.all(np.diff(trace) <= 1e-12 * (1.0 + np.abs(trace[0])))


def test_solve_subproblem_matches_reference(rng):
    for _ in range(4):
        n = int(rng.integers(5, 20))
        p = int(rng.integers(3, 20))
        spec = _random_spec(rng, n=n, p=p, centered=False)
        res = solve_subproblem(spec, SNCGConfig(eps_sncg=1e-11, j_max=100))
        x_ref_sol, _ = reference_subproblem(
            spec.inst.A,
            spec.inst.b,
            spec.x_ref,
            spec.z_ref,
            spec.omega,
            spec.mu,
            spec.gamma1,
            spec.gamma2,
        )
        np.testing.assert_allclose(res.x, x_ref_sol, atol=1e-6)
