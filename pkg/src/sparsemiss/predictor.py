"""
Thresholded subspace-projection regressor.

A partially observed point is projected onto the estimated subspace using
only its observed rows, ``x_tilde = (U_O' U_O)^{-1} U_O' x_O``, and the
prediction ``w' x_tilde`` is emitted only when the restricted Gram matrix is
well conditioned enough: ``||(U_O' U_O)^{-1}||_2 <= D / (m (1 - gamma))``
with ``m = |O|``. Otherwise the prediction is 0.
"""
from dataclasses import dataclass

import numpy as np

from .datamodel import DataError

__all__ = ["Prediction", "predict", "predict_batch", "test_mse", "COND_LIMIT"]

COND_LIMIT = 1e12


@dataclass(frozen=True)
class Prediction:
    value: float
    indicator_passed: bool
    projection_norm: float


def _basis(U):
    return np.asarray(getattr(U, "basis", U), dtype=float)


def threshold(D, m, gamma):
    return D / (m * (1.0 - gamma))


def predict(U, w, gamma, sample, D=None):
    """Predict the label of one partially observed sample.

    Returns
    -------
    Prediction
        ``projection_norm`` is ``inf`` when the restricted Gram matrix is
        singular or ``Omega`` is empty.
    """
    U = _basis(U)
    w = np.asarray(w, dtype=float)
    D = U.shape[0] if D is None else D
    if U.shape[0] != D or w.shape != (U.shape[1],):
        raise ValueError("dimension mismatch between basis, weights and D")
    idx = sample.indices
    if idx.size and (idx.min() < 0 or idx.max() >= D):
        raise DataError(f"sample index out of range for D={D}")
    m = idx.size
    if m == 0:
        return Prediction(0.0, False, np.inf)
    Uo = U[idx]
    G = Uo.T @ Uo
    ev = np.linalg.eigvalsh(G)
    if not ev[0] > ev[-1] / COND_LIMIT:
        return Prediction(0.0, False, np.inf)
    norm = 1.0 / ev[0]
    if norm > threshold(D, m, gamma):
        return Prediction(0.0, False, float(norm))
    x_tilde = np.linalg.solve(G, Uo.T @ sample.values)
    return Prediction(float(w @ x_tilde), True, float(norm))


def predict_batch(U, w, gamma, ds):
    """Vectorized :func:`predict` over a dataset.

    Returns
    -------
    values : (n,) ndarray
    passed : (n,) bool ndarray
    """
    U = _basis(U)
    w = np.asarray(w, dtype=float)
    D, d = U.shape
    if ds.ambient_dim != D or w.shape != (d,):
        raise ValueError("dimension mismatch between basis, weights and dataset")
    n = len(ds)
    M = ds.mask
    X = ds.zero_filled
    m = M.sum(axis=0)
    # G_i = sum over observed rows j of u_j u_j'
    outer = (U[:, :, None] * U[:, None, :]).reshape(D, d * d)
    G = (M.T.astype(float) @ outer).reshape(n, d, d)
    b = (U.T @ X).T
    values = np.zeros(n)
    passed = np.zeros(n, dtype=bool)
    ok = m > 0
    if not np.any(ok):
        return values, passed
    ev = np.linalg.eigvalsh(G[ok])
    lo, hi = ev[:, 0], ev[:, -1]
    good = lo > hi / COND_LIMIT
    with np.errstate(divide="ignore"):
        norm = np.where(good, 1.0 / np.where(good, lo, 1.0), np.inf)
    good &= norm <= threshold(D, np.maximum(m[ok], 1), gamma)
    where = np.flatnonzero(ok)[good]
    if where.size:
        x_tilde = np.linalg.solve(G[where], b[where][:, :, None])[:, :, 0]
        values[where] = x_tilde @ w
        passed[where] = True
    return values, passed


def test_mse(U, w, gamma, ds):
    """Mean squared prediction error over a labeled dataset."""
    if len(ds) == 0:
        raise DataError("empty test set")
    ds.require_labels("test set")
    values, _ = predict_batch(U, w, gamma, ds)
    r = ds.labels - values
    return float(r @ r / r.size)


test_mse.__test__ = False
