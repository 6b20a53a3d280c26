"""
SLRM: stochastic alternating minimization that jointly learns a subspace
basis ``U`` (orthonormal columns), per-sample codes and a sparse regressor
``w`` from partially observed, labeled data.

Per sample the driver

1. solves for the code ``alpha`` that balances reconstruction of the observed
   entries against the current label prediction,
2. moves the observed rows of ``U`` with a per-row RLS (Newton) step,
3. maps ``U`` back to orthonormal columns by its polar factor,
4. takes a proximal stochastic gradient step on ``w``,

and periodically scores ``(U, w)`` on a hold-out set, keeping the best pair.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .datamodel import DataError, SubspaceEstimate
from ._kernels import polar, prox_grad_step, solve_code
from .numerics import RANK_RTOL, lasso_prox_grad, prox_l1, solve_spd, svd_init
from .petrels import RlsState, petrels_update_, rls_init
from .predictor import test_mse

__all__ = [
    "SlrmModel",
    "TrainState",
    "Checkpoint",
    "solve_alpha",
    "alpha_objective",
    "w_step",
    "step_size",
    "validation_error",
    "least_squares_codes",
    "initialize",
    "train",
    "repair_basis",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlrmModel:
    subspace: SubspaceEstimate
    weights: np.ndarray
    gamma: float
    best_validation_error: float = np.inf
    history: tuple = ()

    def predict(self, sample):
        from .predictor import predict

        return predict(self.subspace, self.weights, self.gamma, sample)

    def mse(self, ds):
        return test_mse(self.subspace, self.weights, self.gamma, ds)


class Checkpoint(tuple):
    """``(t, validation_error, best_so_far)`` recorded at each validation."""

    __slots__ = ()

    def __new__(cls, t, error, best):
        return super().__new__(cls, (t, error, best))

    t = property(lambda self: self[0])
    error = property(lambda self: self[1])
    best = property(lambda self: self[2])


@dataclass
class TrainState:
    current_U: np.ndarray
    current_w: np.ndarray
    codes: np.ndarray
    rls: RlsState
    step_count: int = 0
    best: SlrmModel = None
    history: list = field(default_factory=list)


def _normal_equations(U, w, indices, values, y, lambda1):
    Uo = U[indices]
    H = lambda1 * (Uo.T @ Uo) + np.outer(w, w)
    g = lambda1 * (Uo.T @ values) + y * w
    return H, g


def alpha_objective(alpha, U, w, sample, lambda1):
    """``lambda1 ||x_O - U_O alpha||^2 + (y - w'alpha)^2``."""
    r = sample.values - U[sample.indices] @ alpha
    e = sample.label - w @ alpha
    return float(lambda1 * (r @ r) + e * e)


def solve_alpha(U, w, sample, lambda1, report=False):
    """Code minimizing the label-aware reconstruction objective.

    Solves ``(lambda1 U_O'U_O + w w') alpha = lambda1 U_O'x_O + y w``;
    degenerate systems get the minimum-norm solution. With ``report=True``
    the full :class:`~sparsemiss.numerics.SolveReport` is returned instead.
    """
    if sample.label is None:
        raise DataError("solve_alpha needs a labeled sample")
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")
    U = np.asarray(U, dtype=float)
    w = np.asarray(w, dtype=float)
    H, g = _normal_equations(U, w, sample.indices, sample.values, sample.label, lambda1)
    rep = solve_spd(H, g)
    return rep if report else rep.solution


def least_squares_codes(U, ds):
    """Per-sample ``argmin ||x_O - U_O alpha||``, minimum norm when degenerate."""
    d = U.shape[1]
    A = np.zeros((d, len(ds)))
    zero = np.zeros(d)
    U = np.ascontiguousarray(U, dtype=float)
    for i, s in enumerate(ds):
        A[:, i] = solve_code(U, s.indices, s.values, 0.0, zero, 1.0)[0]
    return A


def w_step(w, alpha, y, eta, lambda2, lambda3):
    """One proximal stochastic gradient step on the weights.

    ``prox_{eta lambda2 ||.||_1}(w - eta (2 (alpha alpha' w - y alpha) + lambda3 w))``
    """
    grad = 2.0 * (alpha * (alpha @ w) - y * alpha) + lambda3 * w
    return prox_l1(w - eta * grad, eta * lambda2)


def step_size(t, rho, constant_rounds):
    """``rho`` for the first ``constant_rounds`` steps, then ``rho * constant_rounds / t``."""
    if t < 1:
        raise ValueError("t counts from 1")
    if t <= constant_rounds:
        return rho
    return rho * max(constant_rounds, 1) / t


def validation_error(U, w, gamma, holdout):
    """Hold-out mean squared error of the thresholded predictor."""
    if len(holdout) == 0:
        raise DataError("empty hold-out set")
    holdout.require_labels("hold-out set")
    return test_mse(U, w, gamma, holdout)


def repair_basis(M, rng):
    """Orthonormalize a possibly rank-deficient ``M``.

    Keeps the well-conditioned left singular directions of ``M`` and pads
    with random directions orthogonal to them.
    """
    D, d = M.shape
    P, s, _ = np.linalg.svd(M, full_matrices=False)
    keep = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    P = P[:, :keep]
    Z = rng.standard_normal((D, d - keep))
    Z -= P @ (P.T @ Z)
    Q, _ = np.linalg.qr(Z)
    Q -= P @ (P.T @ Q)
    Q, _ = np.linalg.qr(Q)
    return np.hstack([P, Q])


def _orthonormalize(U, rng):
    Q, ratio = polar(U)
    if ratio > RANK_RTOL:
        return Q
    log.warning("basis became rank deficient (ratio %.3e); repairing", ratio)
    return repair_basis(U, rng)


def stream_step(U, rls, sample, y, w, lambda1, rng):
    """Code, RLS row update and orthonormalization for one sample.

    Returns the new basis and the code used. ``U`` is updated in place
    before being replaced by its polar factor.
    """
    alpha, _ = solve_code(U, sample.indices, sample.values, y, w, lambda1)
    petrels_update_(U, rls, sample.indices, sample.values, alpha)
    return _orthonormalize(U, rng), alpha


def initialize(ds_train, d, hp):
    """Zero-fill SVD basis, projected codes, LASSO weights and fresh RLS state."""
    if len(ds_train) == 0:
        raise DataError("empty training set")
    ds_train.require_labels("training set")
    U0 = svd_init(ds_train, d).basis.copy()
    A0 = least_squares_codes(U0, ds_train)
    w0 = lasso_prox_grad(A0, ds_train.labels, hp.lambda2, rtol=1e-8, max_iter=10_000)
    return TrainState(
        current_U=U0,
        current_w=w0,
        codes=A0,
        rls=rls_init(ds_train.ambient_dim, d, hp.delta_rls),
        best=SlrmModel(SubspaceEstimate(U0), w0.copy(), hp.gamma),
    )


def train(ds_train, ds_val, d, hp, callback=None, state=None):
    """Run SLRM and return the best model seen on ``ds_val``.

    Parameters
    ----------
    ds_train, ds_val : Dataset
        Labeled training and hold-out sets.
    d : int
        Subspace dimension.
    hp : Hyperparams
    callback : callable, optional
        Called as ``callback(state, alpha, sample)`` after every processed
        sample (after the weight update, before validation).
    state : TrainState, optional
        Start from this state instead of :func:`initialize`.

    Returns
    -------
    SlrmModel
        Its ``history`` lists every :class:`Checkpoint`.
    """
    ds_val.require_labels("validation set")
    if len(ds_val) == 0:
        raise DataError("empty validation set")
    if state is None:
        state = initialize(ds_train, d, hp)
    n = len(ds_train)
    period = hp.period_for(n)
    rng_order = substream(hp.seed, "shuffling")
    rng_repair = substream(hp.seed, "init")
    samples = ds_train.samples
    U, w = state.current_U, state.current_w
    best_err = state.best.best_validation_error
    best_U, best_w = state.best.subspace.basis, state.best.weights

    def checkpoint():
        nonlocal best_err, best_U, best_w
        err = validation_error(U, w, hp.gamma, ds_val)
        if err < best_err:
            best_err, best_U, best_w = err, U.copy(), w.copy()
        state.history.append(Checkpoint(state.step_count, err, best_err))

    checkpoint()
    for _ in range(hp.max_passes):
        for i in rng_order.permutation(n):
            s = samples[i]
            state.step_count += 1
            U, alpha = stream_step(U, state.rls, s, s.label, w, hp.lambda1, rng_repair)
            state.codes[:, i] = alpha
            eta = step_size(state.step_count, hp.rho, hp.rho_constant_rounds)
            w = prox_grad_step(w, alpha, s.label, eta, hp.lambda2, hp.lambda3)
            state.current_U, state.current_w = U, w
            if callback is not None:
                callback(state, alpha, s)
            if state.step_count % period == 0:
                checkpoint()
    if state.history[-1][0] != state.step_count:
        checkpoint()
    state.best = SlrmModel(SubspaceEstimate(best_U), best_w, hp.gamma, best_err, tuple(state.history))
    return state.best
