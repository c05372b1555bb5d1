"""Scikit-learn style estimator fronts for the two solvers, so the sparse
robust regression composes with pipelines, grid search and friends."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .ipadmm import ADMMConfig, admm_solve
from .penalty import PenaltyParams
from .pmm import PMMConfig, choose_rho, default_lambda, init_x0, pmm_solve
from .problem import ProblemInstance


class _BaseSparseRegressor(RegressorMixin, BaseEstimator):
    """Shared fit plumbing: validate (X, y), build the immutable problem
    instance, resolve the penalty level and scale, then dispatch to the
    concrete solver."""

    def __init__(self, lam="auto", lam_factor=0.2, a=6.0, mu=1e-8, rho="auto"):
        self.lam = lam
        self.lam_factor = lam_factor
        self.a = a
        self.mu = mu
        self.rho = rho

    def _pmm_config(self) -> PMMConfig:
        return PMMConfig()

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        inst = ProblemInstance(np.asarray(X, float), np.asarray(y, float), mu=self.mu)
        lam = self.lam if self.lam != "auto" else default_lambda(inst, self.lam_factor)
        cfg = self._pmm_config()
        x0 = init_x0(inst, lam, cfg)
        rho = self.rho if self.rho != "auto" else choose_rho(x0, inst.n, inst.p)
        params = PenaltyParams(a=self.a, lam=float(lam), rho=float(rho))
        report = self._solve(inst, params, cfg, x0)
        self.coef_ = report.x
        self.n_iter_ = report.iterations
        self.report_ = report
        self.lam_ = float(lam)
        self.rho_ = float(rho)
        self.n_features_in_ = inst.p
        return self

    def _solve(self, inst, params, cfg, x0):
        raise NotImplementedError

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class PMMRegressor(_BaseSparseRegressor):
    """Sparse robust regression by proximal majorization-minimization with
    dual semismooth Newton-CG inner solves.

    Minimizes the averaged absolute loss plus a tiny ridge and a zero-norm
    penalty through its exact concave-capped surrogate.  ``lam="auto"``
    applies the column-sum rule at ``lam_factor``; ``rho="auto"`` scales the
    cap from the l1-regularized starting point.
    """

    def __init__(
        self,
        lam="auto",
        lam_factor=0.2,
        a=6.0,
        mu=1e-8,
        rho="auto",
        tol=1e-6,
        tol_sparse=1e-4,
        k_max=200,
        keep_history=False,
    ):
        super().__init__(lam=lam, lam_factor=lam_factor, a=a, mu=mu, rho=rho)
        self.tol = tol
        self.tol_sparse = tol_sparse
        self.k_max = k_max
        self.keep_history = keep_history

    def _pmm_config(self) -> PMMConfig:
        return PMMConfig(
            tol=self.tol,
            tol_sparse=self.tol_sparse,
            k_max=self.k_max,
            keep_history=self.keep_history,
        )

    def _solve(self, inst, params, cfg, x0):
        return pmm_solve(inst, params, cfg, x0=x0)


class IPADMMRegressor(_BaseSparseRegressor):
    """Baseline solver: indefinite-proximal ADMM on the smoothed surrogate.

    ``eps_smooth`` controls how closely the Huber-smoothed loss tracks the
    absolute loss; ``sigma=None`` uses the 4.5/eps_smooth default.
    """

    def __init__(
        self,
        lam="auto",
        lam_factor=0.2,
        a=6.0,
        mu=1e-8,
        rho="auto",
        eps_smooth=1.0,
        sigma=None,
        k_max=20000,
        eps_admm=1e-5,
    ):
        super().__init__(lam=lam, lam_factor=lam_factor, a=a, mu=mu, rho=rho)
        self.eps_smooth = eps_smooth
        self.sigma = sigma
        self.k_max = k_max
        self.eps_admm = eps_admm

    def _solve(self, inst, params, cfg, x0):
        acfg = ADMMConfig(
            eps_smooth=self.eps_smooth,
            sigma=self.sigma,
            k_max=self.k_max,
            eps_admm=self.eps_admm,
        )
        start = (x0, inst.A @ x0 - inst.b, np.zeros(inst.n))
        return admm_solve(inst, params, acfg, start=start)
