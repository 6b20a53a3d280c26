"""
Closed-form evaluators for the generalization guarantees of the
thresholded predictor: the risk bound, the Rademacher complexity bound,
subspace coherence and the coherence-based lower bound on ``gamma``.

All logarithms are natural. ``K`` in the risk bound is an unspecified
universal constant; it defaults to 1 and any numeric result is therefore
only meaningful relative to that choice.
"""
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundParams",
    "theorem1_rhs",
    "rademacher_bound",
    "coherence",
    "gamma_lower_bound",
    "inverse_gram_norm",
]


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the risk bound.

    n : training set size
    m : observed entries per sample
    D : ambient dimension
    R1 : l1 radius of the weight vector
    B_X : sup-norm bound on features
    B_Y : bound on |y|
    gamma : threshold parameter in [0, 1)
    delta_prob : failure probability in (0, 1)
    K : universal constant (not given numerically; default 1)
    empirical_loss : training mean squared error
    """

    n: int
    m: int
    D: int
    R1: float
    B_X: float
    B_Y: float
    gamma: float
    delta_prob: float
    K: float = 1.0
    empirical_loss: float = 0.0

    def __post_init__(self):
        if not (self.n >= 1 and self.m >= 1 and self.D >= 1):
            raise ValueError("n, m and D must be positive")
        if not (self.R1 > 0 and self.B_X > 0 and self.B_Y >= 0 and self.K > 0):
            raise ValueError("R1, B_X, K must be positive and B_Y nonnegative")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0 < self.delta_prob < 1:
            raise ValueError("delta_prob must lie in (0, 1)")
        if not self.empirical_loss >= 0:
            raise ValueError("empirical_loss must be nonnegative")

    @property
    def b(self):
        """Loss range ``2 (B_Y + D R1 / (m (1 - gamma)))^2``."""
        return 2.0 * (self.B_Y + self.D * self.R1 / (self.m * (1.0 - self.gamma))) ** 2


def theorem1_rhs(p):
    """Upper bound on the expected squared loss holding w.p. ``1 - delta_prob``.

    ::

        L_hat + K [ sqrt(L_hat) ((m/n + 1/sqrt n) C + sqrt(b log(1/delta) / n))
                    + b log(1/delta) / n
                    + log(n)^3 (m/n + 1/sqrt n)^2 C^2 ]

    with ``C = D R1 B_X / (1 - gamma)``.
    """
    n, L = p.n, p.empirical_loss
    C = p.D * p.R1 * p.B_X / (1.0 - p.gamma)
    rate = p.m / n + 1.0 / math.sqrt(n)
    conf = p.b * math.log(1.0 / p.delta_prob) / n
    inner = math.sqrt(L) * (rate * C + math.sqrt(conf)) + conf + math.log(n) ** 3 * rate**2 * C**2
    return L + p.K * inner


def rademacher_bound(n, m, D, R1, B_X, gamma):
    """``(50 m / n + 14 / sqrt n) * 3 D R1 B_X / (1 - gamma)``."""
    if not (n >= 1 and m >= 1 and D >= 1 and R1 > 0 and B_X > 0):
        raise ValueError("n, m, D, R1, B_X must be positive")
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    return (50.0 * m / n + 14.0 / math.sqrt(n)) * 3.0 * D * R1 * B_X / (1.0 - gamma)


def coherence(U, tol=1e-8):
    """``(D/d) max_j ||U' e_j||^2`` for a basis ``U`` with orthonormal columns."""
    U = np.asarray(getattr(U, "basis", U), dtype=float)
    D, d = U.shape
    if np.linalg.norm(U.T @ U - np.eye(d)) > tol:
        raise ValueError("coherence needs orthonormal columns")
    return float(D / d * np.max(np.einsum("ij,ij->i", U, U)))


def gamma_lower_bound(d, mu, m, delta_prob):
    """``sqrt(8 d mu log(2 d / delta) / (3 m))``.

    Values at or above 1 mean ``m`` is too small for the concentration
    argument to apply; no valid ``gamma < 1`` exists in that case.
    """
    if not (d >= 1 and mu > 0 and m > 0):
        raise ValueError("d, mu and m must be positive")
    if not 0 < delta_prob < 1:
        raise ValueError("delta_prob must lie in (0, 1)")
    return math.sqrt(8.0 * d * mu * math.log(2.0 * d / delta_prob) / (3.0 * m))


def inverse_gram_norm(U, omega):
    """``||(U_O' U_O)^{-1}||_2`` where ``omega`` may repeat rows; ``inf`` if singular."""
    Uo = np.asarray(U)[np.asarray(omega)]
    ev = np.linalg.eigvalsh(Uo.T @ Uo)
    if not ev[0] > ev[-1] * 1e-12:
        return math.inf
    return float(1.0 / ev[0])
