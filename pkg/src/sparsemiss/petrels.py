"""
Per-row recursive least squares subspace updates for streaming data with
missing entries (PETRELS-style second-order steps).

Each row ``j`` of the basis keeps the inverse of its own normal matrix,
``R_j^{-1}``. A sample observed on ``Omega`` with code ``alpha`` touches only
the rows in ``Omega``: a Sherman-Morrison rank-one downdate of ``R_j^{-1}``
followed by a Newton step on the row. How ``alpha`` is chosen is up to the
caller; SLRM uses a label-aware code, SMPCR a plain least-squares projection.
"""
from dataclasses import dataclass

import numpy as np

from ._kernels import petrels_rows
from .datamodel import DataError

__all__ = [
    "RlsState",
    "rls_init",
    "modified_petrels_step",
    "petrels_update_",
    "rls_stream_equivalence_check",
]

SYMMETRIZE_EVERY = 1000


@dataclass
class RlsState:
    """The ``D`` per-row inverse normal matrices, stacked as ``(D, d, d)``.

    ``steps`` counts updates applied so far; every ``SYMMETRIZE_EVERY``
    updates the inverses are averaged with their transposes.
    """

    inverses: np.ndarray
    steps: int = 0

    @property
    def ambient_dim(self):
        return self.inverses.shape[0]

    @property
    def intrinsic_dim(self):
        return self.inverses.shape[1]

    def copy(self):
        return RlsState(self.inverses.copy(), self.steps)

    def check(self, tol=1e-8):
        """Raise AssertionError unless every inverse is symmetric PSD within ``tol``."""
        R = self.inverses
        asym = np.abs(R - R.transpose(0, 2, 1)).max(initial=0.0)
        assert asym <= tol, f"asymmetry {asym:.3e}"
        lo = np.linalg.eigvalsh(0.5 * (R + R.transpose(0, 2, 1))).min(initial=0.0)
        assert lo >= -tol, f"smallest eigenvalue {lo:.3e}"


def rls_init(D, d, delta):
    """Every row inverse set to ``delta * I_d``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not D >= d >= 1:
        raise ValueError("need D >= d >= 1")
    inv = np.broadcast_to(delta * np.eye(d), (D, d, d)).copy()
    return RlsState(inv)


def petrels_update_(U, state, indices, values, alpha):
    """In-place update of ``U`` and ``state`` for one observed sample.

    ``U`` is modified only on the rows in ``indices``; the same holds for
    ``state.inverses`` except on the periodic symmetrization step. Returns
    ``U`` for convenience.
    """
    state.steps += 1
    if indices.size:
        petrels_rows(U, state.inverses, indices, values, alpha)
    if state.steps % SYMMETRIZE_EVERY == 0:
        inv = state.inverses
        inv += inv.transpose(0, 2, 1).copy()
        inv *= 0.5
    return U


def modified_petrels_step(U_prev, sample, alpha, state):
    """One MODIFIED-PETRELS step, returning new ``(U, state)`` objects.

    For each observed row ``j``::

        beta_j   = 1 + alpha' R_j^{-1} alpha
        v_j      = R_j^{-1} alpha
        R_j^{-1} <- R_j^{-1} - v_j v_j' / beta_j
        U_j      <- U_j + (x_j - alpha' U_j) R_j^{-1} alpha    (updated inverse)

    Unobserved rows and their inverses are returned untouched.
    """
    U_prev = np.asarray(U_prev, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    D, d = U_prev.shape
    if alpha.shape != (d,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({d},)")
    if state.inverses.shape != (D, d, d):
        raise ValueError("RLS state does not match the basis shape")
    if sample.indices.size and (sample.indices.max() >= D or sample.indices.min() < 0):
        raise DataError(f"sample index out of range for D={D}")
    if not np.all(np.isfinite(alpha)):
        raise ValueError("alpha must be finite")
    U = U_prev.copy()
    new_state = state.copy()
    petrels_update_(U, new_state, sample.indices, sample.values, alpha)
    return U, new_state


def rls_stream_equivalence_check(alphas, masks, delta):
    """Largest Frobenius gap between streamed and directly inverted RLS matrices.

    Runs the rank-one recursion for a single row over ``alphas`` (applying
    step ``t`` only where ``masks[t]`` is true) and compares, after every
    step, against ``inv(I / delta + sum_s p_s alpha_s alpha_s')``.
    """
    alphas = [np.asarray(a, dtype=float) for a in alphas]
    masks = list(masks)
    if not alphas or len(alphas) != len(masks):
        raise ValueError("need equally many (at least one) codes and masks")
    if not delta > 0:
        raise ValueError("delta must be positive")
    d = alphas[0].size
    R = delta * np.eye(d)
    normal = np.eye(d) / delta
    worst = 0.0
    for a, p in zip(alphas, masks):
        if p:
            v = R @ a
            beta = 1.0 + a @ R @ a
            R = R - np.outer(v, v) / beta
            normal = normal + np.outer(a, a)
        direct = np.linalg.solve(normal, np.eye(d))
        worst = max(worst, float(np.linalg.norm(R - direct)))
    return worst
