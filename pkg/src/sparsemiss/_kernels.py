"""Compiled per-sample kernels for the SLRM / SMPCR training loops.

These mirror ``slrm._normal_equations`` + ``numerics.spd_solution``,
``petrels.petrels_update_`` and ``numerics.polar_factor`` without numpy call
overhead. The numpy versions remain the reference implementations.
"""
import numpy as np
from numba import njit

PIVOT_RTOL = 1e-13
RANK_RTOL = 1e-12


@njit(cache=True)
def _cholesky_solve(H, g):
    d = H.shape[0]
    L = np.zeros((d, d))
    for i in range(d):
        for k in range(i + 1):
            acc = H[i, k]
            for r in range(k):
                acc -= L[i, r] * L[k, r]
            if i == k:
                if acc <= 0.0:
                    return g, False
                L[i, i] = np.sqrt(acc)
            else:
                L[i, k] = acc / L[k, k]
    lo = np.inf
    hi = 0.0
    for i in range(d):
        lo = min(lo, L[i, i])
        hi = max(hi, L[i, i])
    if not lo * lo > PIVOT_RTOL * hi * hi:
        return g, False
    z = np.empty(d)
    for i in range(d):
        acc = g[i]
        for r in range(i):
            acc -= L[i, r] * z[r]
        z[i] = acc / L[i, i]
    for i in range(d - 1, -1, -1):
        acc = z[i]
        for r in range(i + 1, d):
            acc -= L[r, i] * z[r]
        z[i] = acc / L[i, i]
    return z, True


@njit(cache=True)
def _pinv_solve(H, g):
    P, s, Qt = np.linalg.svd(H)
    cut = 1e-12 * s[0]
    z = np.zeros(H.shape[0])
    for k in range(s.size):
        if s[k] > cut:
            c = 0.0
            for i in range(H.shape[0]):
                c += P[i, k] * g[i]
            c /= s[k]
            for i in range(H.shape[0]):
                z[i] += Qt[k, i] * c
    return z


@njit(cache=True)
def solve_code(U, idx, vals, y, w, lambda1):
    """Minimizer of ``lambda1 ||x_O - U_O a||^2 + (y - w'a)^2``; returns (alpha, used_pinv)."""
    d = U.shape[1]
    H = np.empty((d, d))
    g = np.empty(d)
    for a in range(d):
        g[a] = y * w[a]
        for b in range(d):
            H[a, b] = w[a] * w[b]
    for r in range(idx.size):
        j = idx[r]
        for a in range(d):
            ua = lambda1 * U[j, a]
            g[a] += ua * vals[r]
            for b in range(d):
                H[a, b] += ua * U[j, b]
    scale = 0.0
    for a in range(d):
        for b in range(d):
            scale = max(scale, abs(H[a, b]))
    if scale == 0.0:
        return np.zeros(d), True
    H /= scale
    g /= scale
    z, ok = _cholesky_solve(H, g)
    if ok:
        return z, False
    return _pinv_solve(H, g), True


@njit(cache=True)
def petrels_rows(U, inv, idx, vals, alpha):
    """Per-row RLS update of the observed rows, in place."""
    d = U.shape[1]
    v = np.empty(d)
    for r in range(idx.size):
        j = idx[r]
        R = inv[j]
        beta = 1.0
        for a in range(d):
            acc = 0.0
            for b in range(d):
                acc += R[a, b] * alpha[b]
            v[a] = acc
            beta += acc * alpha[a]
        for a in range(d):
            for b in range(d):
                R[a, b] -= v[a] * v[b] / beta
        resid = vals[r]
        for a in range(d):
            resid -= alpha[a] * U[j, a]
        for a in range(d):
            acc = 0.0
            for b in range(d):
                acc += R[a, b] * alpha[b]
            U[j, a] += resid * acc


GRAM_RATIO = 1e-3  # below this (estimated) sigma_min^2 / sigma_max^2 use the SVD
NS_MAX_ITER = 40


@njit(cache=True)
def _matmul(A, B):
    n, k = A.shape
    m = B.shape[1]
    C = np.zeros((n, m))
    for i in range(n):
        for r in range(k):
            a = A[i, r]
            for j in range(m):
                C[i, j] += a * B[r, j]
    return C


@njit(cache=True)
def polar(M):
    """Polar factor; returns ``(Q, ratio)`` with ``ratio <= sigma_min / sigma_max``.

    The usual input is one RLS step away from orthonormal. For that case
    ``(M'M)^{-1/2}`` comes from a coupled Newton-Schulz iteration on the
    ``d x d`` Gram matrix, so the cost is ``O(D d^2)`` with no LAPACK call, and
    ``ratio`` is the lower bound ``1 / (||Y||_F ||Z||_F)`` from the converged
    iterates. Its orthonormality error grows like ``eps * cond(M)^2``, so
    inputs whose bound falls below ``sqrt(GRAM_RATIO)``, or on which the
    iteration stalls, go through the thin SVD, where ``ratio`` is exact.
    """
    D, d = M.shape
    G = np.zeros((d, d))
    for j in range(D):
        for a in range(d):
            ma = M[j, a]
            for b in range(a, d):
                G[a, b] += ma * M[j, b]
    scale = 0.0
    for a in range(d):
        for b in range(a):
            G[a, b] = G[b, a]
    for a in range(d):
        row = 0.0
        for b in range(d):
            row += abs(G[a, b])
        scale = max(scale, row)
    if scale > 0.0:
        # Y -> (G/scale)^{1/2}, Z -> (G/scale)^{-1/2}; eigenvalues of G/scale lie in (0, 1].
        Y = G / scale
        Z = np.eye(d)
        T = np.empty((d, d))
        for _ in range(NS_MAX_ITER):
            ZY = _matmul(Z, Y)
            dev = 0.0
            for a in range(d):
                for b in range(d):
                    T[a, b] = -0.5 * ZY[a, b]
                    dev = max(dev, abs(ZY[a, b] - (1.0 if a == b else 0.0)))
                T[a, a] += 1.5
            Y = _matmul(Y, T)
            Z = _matmul(T, Z)
            if dev < 1e-15:
                break
        else:
            dev = 1.0
        if dev < 1e-15:
            ny = np.sqrt(np.sum(Y * Y))
            nz = np.sqrt(np.sum(Z * Z))
            ratio = 1.0 / (ny * nz)
            if ratio * ratio > GRAM_RATIO:
                return _matmul(M, Z) / np.sqrt(scale), ratio
    P, s, Qt = np.linalg.svd(M, full_matrices=False)
    ratio = s[-1] / s[0] if s[0] > 0 else 0.0
    return P @ Qt, ratio


@njit(cache=True)
def prox_grad_step(w, alpha, y, eta, lambda2, lambda3):
    """Proximal stochastic gradient step on the weights (see ``slrm.w_step``)."""
    d = w.size
    aw = 0.0
    for a in range(d):
        aw += alpha[a] * w[a]
    out = np.empty(d)
    tau = eta * lambda2
    for a in range(d):
        grad = 2.0 * (alpha[a] * aw - y * alpha[a]) + lambda3 * w[a]
        u = w[a] - eta * grad
        out[a] = np.sign(u) * max(abs(u) - tau, 0.0)
    return out
