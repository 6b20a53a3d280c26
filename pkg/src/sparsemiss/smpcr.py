"""
SMPCR, the two-stage baseline: fit the subspace without labels by streaming
PETRELS, then fit a sparse regressor on the resulting codes by stochastic
proximal gradient.

Stage 1 runs the same per-sample machinery as SLRM with ``w = 0`` and
``lambda1 = 1``, so the only difference between the two methods is whether
the code of a sample sees its label.
"""
from dataclasses import dataclass

import numpy as np

from ._kernels import prox_grad_step
from ._rng import substream
from .datamodel import DataError, SubspaceEstimate
from .numerics import lasso_objective, svd_init
from .petrels import rls_init
from .predictor import test_mse
from .slrm import least_squares_codes, step_size, stream_step

__all__ = ["SmpcrModel", "smpcr_stage1", "smpcr_stage2", "smpcr_train"]


@dataclass(frozen=True)
class SmpcrModel:
    subspace: SubspaceEstimate
    weights: np.ndarray
    gamma: float
    best_validation_error: float = np.inf

    def mse(self, ds):
        return test_mse(self.subspace, self.weights, self.gamma, ds)


def smpcr_stage1(ds, d, hp):
    """Label-blind subspace and code estimation.

    Only ``indices`` and ``values`` of the samples are read.

    Returns
    -------
    subspace : SubspaceEstimate
    codes : (d, n) ndarray
    """
    if len(ds) == 0:
        raise DataError("empty training set")
    n = len(ds)
    U = svd_init(ds, d).basis.copy()
    zero = np.zeros(d)
    if hp.max_passes == 0:
        return SubspaceEstimate(U), least_squares_codes(U, ds)
    codes = np.zeros((d, n))
    rls = rls_init(ds.ambient_dim, d, hp.delta_rls)
    rng_order = substream(hp.seed, "shuffling")
    rng_repair = substream(hp.seed, "init")
    samples = ds.samples
    for _ in range(hp.max_passes):
        for i in rng_order.permutation(n):
            s = samples[i]
            U, alpha = stream_step(U, rls, s, 0.0, zero, 1.0, rng_repair)
            codes[:, i] = alpha
    return SubspaceEstimate(U), codes


def _stage2_passes(codes, labels, hp):
    """Yield the weights after each pass of stochastic proximal gradient."""
    d, n = codes.shape
    w = np.zeros(d)
    rng = substream(hp.seed, "shuffling-stage2")
    t = 0
    for _ in range(hp.max_passes):
        for i in rng.permutation(n):
            t += 1
            eta = step_size(t, hp.rho, hp.rho_constant_rounds)
            w = prox_grad_step(w, codes[:, i], labels[i], eta, hp.lambda2, 0.0)
        yield w


def smpcr_stage2(codes, labels, hp):
    """Sparse regression on codes: ``(1/n)||Y - A'w||^2 + lambda2 ||w||_1``.

    Starts from ``w = 0`` and runs ``hp.max_passes`` shuffled passes.
    """
    codes = np.asarray(codes, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if codes.ndim != 2 or codes.shape[1] != labels.size:
        raise ValueError("codes and labels must describe the same samples")
    if labels.size == 0:
        raise DataError("empty input")
    w = np.zeros(codes.shape[0])
    for w in _stage2_passes(codes, labels, hp):
        pass
    return w


def stage2_objective(codes, labels, w, hp):
    return lasso_objective(codes, labels, w, hp.lambda2)


def smpcr_train(ds_train, ds_val, d, hp, validation_gating=True, stage1=None):
    """Fit SMPCR.

    With ``validation_gating`` the weights after each stage-2 pass are scored
    on ``ds_val`` and the best are kept; otherwise the final weights are
    returned. ``stage1`` may carry a precomputed ``(subspace, codes)`` pair
    from :func:`smpcr_stage1` (it does not depend on the labels or on the
    stage-2 hyperparameters).
    """
    ds_train.require_labels("training set")
    subspace, codes = smpcr_stage1(ds_train, d, hp) if stage1 is None else stage1
    labels = ds_train.labels
    if not validation_gating:
        w = smpcr_stage2(codes, labels, hp)
        return SmpcrModel(subspace, w, hp.gamma)
    if len(ds_val) == 0:
        raise DataError("empty validation set")
    ds_val.require_labels("validation set")
    best_w = np.zeros(d)
    best_err = test_mse(subspace, best_w, hp.gamma, ds_val)
    for w in _stage2_passes(codes, labels, hp):
        err = test_mse(subspace, w, hp.gamma, ds_val)
        if err < best_err:
            best_err, best_w = err, w.copy()
    return SmpcrModel(subspace, best_w, hp.gamma, best_err)
