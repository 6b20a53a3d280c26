"""
Small numerical kernels used by the training algorithms.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dposv

from .datamodel import DataError, NumericalError, SubspaceEstimate

__all__ = [
    "RankDeficientError",
    "SolveReport",
    "prox_l1",
    "polar_factor",
    "orthonormalize_polar",
    "svd_init",
    "solve_spd",
    "operator_norm",
    "lasso_objective",
    "lasso_prox_grad",
]

RANK_RTOL = 1e-12


class RankDeficientError(NumericalError):
    """Raised when a matrix is numerically rank deficient.

    ``ratio`` is the smallest-to-largest singular value ratio that triggered it.
    """

    def __init__(self, ratio, message=None):
        self.ratio = float(ratio)
        super().__init__(message or f"matrix is rank deficient (sigma_min / sigma_max = {self.ratio:.3e})")


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    residual_norm: float
    used_pseudoinverse: bool


def prox_l1(v, tau):
    """Soft thresholding, the proximal map of ``tau * ||.||_1``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def polar_factor(M):
    """Nearest matrix with orthonormal columns to ``M`` in Frobenius norm.

    Computed from the thin SVD ``M = P S Q'`` as ``P Q'``, which equals
    ``M (M'M)^{-1/2}`` for full column rank ``M``.

    Raises
    ------
    RankDeficientError
        If ``sigma_min <= 1e-12 * sigma_max``.
    """
    P, s, Qt = np.linalg.svd(M, full_matrices=False)
    ratio = s[-1] / s[0] if s[0] > 0 else 0.0
    if not ratio > RANK_RTOL:
        raise RankDeficientError(ratio)
    return P @ Qt


def orthonormalize_polar(M):
    """Polar orthonormalization of a full-column-rank ``D x d`` matrix.

    Returns
    -------
    SubspaceEstimate
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] > M.shape[0]:
        raise ValueError(f"expected a tall D x d matrix, got shape {M.shape}")
    return SubspaceEstimate(polar_factor(M))


def svd_init(ds, d):
    """Top-``d`` left singular vectors of the zero-filled data matrix."""
    if len(ds) == 0:
        raise DataError("cannot initialize from an empty dataset")
    D, n = ds.ambient_dim, len(ds)
    if not 1 <= d <= min(D, n):
        raise ValueError(f"d={d} must satisfy 1 <= d <= min(D, n) = {min(D, n)}")
    X0 = ds.dense(0.0)
    P, s, _ = np.linalg.svd(X0, full_matrices=False)
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    if rank < d:
        raise ValueError(f"zero-filled data has numerical rank {rank}; d={d} is not achievable")
    return SubspaceEstimate(P[:, :d])


def solve_spd(H, g):
    """Solve the symmetric system ``H z = g``.

    Uses a Cholesky factorization when ``H`` is safely positive definite and
    falls back to the minimum-norm least-squares solution otherwise.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] != g.shape[0]:
        raise ValueError("dimension mismatch between H and g")
    scale = max(np.abs(H).max(), 1.0)
    if np.abs(H - H.T).max() > 1e-10 * scale:
        raise ValueError("H is not symmetric")
    z, pinv = spd_solution(H, g)
    return SolveReport(z, float(np.linalg.norm(H @ z - g)), pinv)


def spd_solution(H, g):
    """Core of :func:`solve_spd` without input checks: ``(z, used_pinv)``."""
    # the solution is invariant to a common positive scale; normalizing keeps
    # tiny (even subnormal) systems away from underflow in the pivots and pinv
    scale = np.abs(H).max() if H.size else 0.0
    if scale == 0.0:
        return np.zeros(H.shape[0]), True
    H = H / scale
    g = g / scale
    c, z, info = dposv(H, g, lower=1)
    if info == 0:
        piv = np.abs(np.diag(c))
        # pivots that collapse relative to the largest reveal numerical singularity
        if piv.min() ** 2 > 1e-13 * piv.max() ** 2:
            return z, False
    return np.linalg.pinv(H, rcond=1e-12, hermitian=True) @ g, True


def operator_norm(M):
    """Largest singular value (spectral norm)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def lasso_objective(A, y, w, lam):
    """``(1/n) ||y - A'w||^2 + lam ||w||_1`` with codes ``A`` stored d x n."""
    r = y - A.T @ w
    return float(r @ r / y.size + lam * np.abs(w).sum())


def lasso_prox_grad(A, y, lam, w0=None, rtol=1e-8, max_iter=10_000):
    """Batch proximal gradient (ISTA) for the code-space LASSO.

    Parameters
    ----------
    A : (d, n) ndarray
        Code vectors as columns.
    y : (n,) ndarray
        Labels.
    lam : float
        l1 weight.
    rtol : float
        Stop once the relative objective change falls below this.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    d, n = A.shape
    w = np.zeros(d) if w0 is None else np.array(w0, dtype=float)
    AAt = A @ A.T / n
    Ay = A @ y / n
    L = 2.0 * np.linalg.eigvalsh(AAt)[-1]
    if L <= 0:
        return prox_l1(w, np.inf) if lam > 0 else w
    step = 1.0 / L
    obj = lasso_objective(A, y, w, lam)
    for _ in range(max_iter):
        grad = 2.0 * (AAt @ w - Ay)
        w = prox_l1(w - step * grad, step * lam)
        new = lasso_objective(A, y, w, lam)
        if abs(obj - new) <= rtol * max(abs(obj), 1e-300):
            obj = new
            break
        obj = new
    return w
