"""Problem instances: dense data (A, b), cached matrix norms, loss evaluation,
and LIBSVM text-file ingestion."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class LibSVMFormatError(ValueError):
    """Raised when a LIBSVM text file cannot be parsed."""


def l1_loss(z):
    """Averaged absolute loss (1/n) * sum_i |z_i|."""
    z = np.asarray(z, dtype=float)
    return float(np.abs(z).sum() / z.size)


def spectral_norm_sq(A, rel_tol=1e-6, max_iter=1000):
    """Squared spectral norm of A estimated by power iteration on A^T A.

    The converged Rayleigh quotient is inflated by 0.1% so the returned value
    can serve as an upper bound on ||A||^2 in step-size formulas (an
    underestimate there would break descent guarantees, an overestimate is
    harmless).  If the iteration does not converge within ``max_iter`` steps a
    warning is emitted and the current estimate times 1.01 is returned.
    """
    A = np.asarray(A, dtype=float)
    p = A.shape[1]
    if not np.any(A):
        return 0.0
    # Deterministic start: all ones plus a tiny fixed perturbation so the
    # iteration cannot start orthogonal to the leading eigenvector.
    v = np.ones(p) + 1e-6 * np.random.default_rng(0).standard_normal(p)
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for _ in range(max_iter):
        u = A.T @ (A @ v)
        lam = float(v @ u)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            # v landed in the null space; restart from a shifted vector.
            v = np.ones(p) / np.sqrt(p)
            lam_prev = 0.0
            continue
        v = u / nu
        if abs(lam - lam_prev) <= rel_tol * max(lam, 1e-300):
            return lam * 1.001
        lam_prev = lam
    warnings.warn(
        "power iteration for ||A||^2 did not reach relative tolerance "
        f"{rel_tol:g} in {max_iter} iterations; returning inflated estimate",
        RuntimeWarning,
    )
    return lam_prev * 1.01


@dataclass(frozen=True)
class ProblemInstance:
    """Dense regression data: an n-by-p matrix A, observations b, and the
    ridge weight mu, with cached norms of A.

    Instances are immutable after construction (arrays are marked read-only)
    and safe to share across threads.
    """

    A: np.ndarray
    b: np.ndarray
    mu: float = 0.0
    spec_norm_sq: float = field(init=False)
    col_sum_norm: float = field(init=False)
    max_abs: float = field(init=False)

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=float)
        b = np.ascontiguousarray(np.asarray(self.b, dtype=float).ravel())
        if A.ndim != 2:
            raise ValueError("A must be a 2-d array")
        n, p = A.shape
        if n < 1 or p < 1:
            raise ValueError("A must have at least one row and one column")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
            raise ValueError("A and b must be finite")
        if b.size != n:
            raise ValueError(f"b has length {b.size}, expected {n}")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "spec_norm_sq", float(spectral_norm_sq(A)))
        object.__setattr__(self, "col_sum_norm", float(np.abs(A).sum(axis=0).max()))
        object.__setattr__(self, "max_abs", float(np.abs(A).max()))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[1]


def residual(inst: ProblemInstance, x) -> np.ndarray:
    """A x - b."""
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.p,):
        raise ValueError(f"x has shape {x.shape}, expected ({inst.p},)")
    return inst.A @ x - inst.b


def load_libsvm(path, mu: float = 0.0) -> ProblemInstance:
    """Load a LIBSVM sparse text file into a dense ProblemInstance.

    Format: one sample per line, ``label idx:val idx:val ...`` with 1-based,
    strictly increasing feature indices.  The feature count p is the largest
    index seen anywhere in the file; labels are used directly as b.
    Comments are not part of the format and are rejected.
    """
    rows = []
    labels = []
    p = 0
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if "#" in line:
                raise LibSVMFormatError(f"line {lineno}: comments are not supported")
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise LibSVMFormatError(
                    f"line {lineno}: bad label {tokens[0]!r}"
                ) from None
            idxs = []
            vals = []
            prev = 0
            for tok in tokens[1:]:
                part = tok.split(":")
                if len(part) != 2:
                    raise LibSVMFormatError(f"line {lineno}: bad feature {tok!r}")
                try:
                    idx = int(part[0])
                    val = float(part[1])
                except ValueError:
                    raise LibSVMFormatError(
                        f"line {lineno}: bad feature {tok!r}"
                    ) from None
                if idx <= prev:
                    raise LibSVMFormatError(
                        f"line {lineno}: indices must be increasing (got {idx} after {prev})"
                    )
                prev = idx
                idxs.append(idx)
                vals.append(val)
            p = max(p, prev)
            labels.append(label)
            rows.append((idxs, vals))
    if not rows:
        raise LibSVMFormatError(f"{path}: no samples")
    if p == 0:
        raise LibSVMFormatError(f"{path}: no features")
    A = np.zeros((len(rows), p))
    for i, (idxs, vals) in enumerate(rows):
        for idx, val in zip(idxs, vals):
            A[i, idx - 1] = val
    return ProblemInstance(A, np.asarray(labels), mu=mu)
