"""Solution-quality metrics: approximate sparsity, relative error, support
confusion counts, and the loss value."""

from __future__ import annotations

import numpy as np

from .problem import ProblemInstance, l1_loss


def _detected(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    m = float(np.max(np.abs(x))) if x.size else 0.0
    if m == 0.0:
        return np.zeros(x.shape, dtype=bool)
    return np.abs(x) > 1e-6 * m


def nnz_approx(x) -> int:
    """Number of entries with |x_i| > 1e-6 * ||x||_inf (0 for the zero vector)."""
    return int(np.count_nonzero(_detected(x)))


def l2err(x_out, x_true) -> float:
    """Relative recovery error ||x_out - x_true|| / ||x_true||."""
    x_true = np.asarray(x_true, dtype=float)
    denom = float(np.linalg.norm(x_true))
    if denom == 0.0:
        raise ValueError("x_true must be nonzero")
    return float(np.linalg.norm(np.asarray(x_out, float) - x_true)) / denom


def fp_fn(x_out, x_true):
    """False positives and false zeros of the detected support versus the
    exact support of x_true."""
    det = _detected(x_out)
    truth = np.asarray(x_true, dtype=float) != 0.0
    fp = int(np.count_nonzero(det & ~truth))
    fn = int(np.count_nonzero(~det & truth))
    return fp, fn


def loss_value(inst: ProblemInstance, x_out) -> float:
    """(1/n) ||A x_out - b||_1."""
    return l1_loss(inst.A @ np.asarray(x_out, float) - inst.b)
