"""
Synthetic data from the low-rank + sparse-regressor model

    x = U_* a + e_x,    y = w_*' a + e_y,

with ``U_*`` a random ``D x d`` orthonormal basis, ``a`` standard normal and
``w_*`` having ``sparsity`` nonzero standard-normal coordinates. Entries are
then hidden at random.
"""
import logging
from dataclasses import asdict, dataclass

import numpy as np

from ._rng import substream
from .datamodel import Dataset, ObservedSample
from .numerics import polar_factor

__all__ = ["SyntheticConfig", "GroundTruth", "generate_synthetic", "bernoulli_omega", "with_replacement_omega"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticConfig:
    D: int = 20
    d: int = 5
    n: int = 1000
    n_val: int = 200
    n_test: int = 500
    sparsity: int = 3
    sigma_x: float = 0.0
    sigma_y: float = 0.0
    p: float = 0.8
    q: float = 0.8
    seed: int = 0
    missingness: str = "bernoulli"

    def __post_init__(self):
        if not 1 <= self.sparsity <= self.d <= self.D:
            raise ValueError("need 1 <= sparsity <= d <= D")
        if not (0 < self.p <= 1 and 0 < self.q <= 1):
            raise ValueError("p and q must lie in (0, 1]")
        if self.sigma_x < 0 or self.sigma_y < 0:
            raise ValueError("noise levels must be nonnegative")
        if min(self.n, self.n_val, self.n_test) < 0:
            raise ValueError("sample counts must be nonnegative")
        if self.missingness not in ("bernoulli", "with_replacement"):
            raise ValueError(f"unknown missingness model {self.missingness!r}")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class GroundTruth:
    U: np.ndarray
    w: np.ndarray


def bernoulli_omega(rng, D, p):
    """Each coordinate observed independently with probability ``p``."""
    return np.flatnonzero(rng.random(D) < p)


def with_replacement_omega(rng, D, m):
    """Distinct coordinates among ``m`` uniform draws with replacement."""
    return np.unique(rng.integers(0, D, size=m))


def _split(cfg, truth, n, keep_prob, rng_data, rng_noise, rng_miss):
    U, w = truth.U, truth.w
    A = rng_data.standard_normal((cfg.d, n))
    X = U @ A
    if cfg.sigma_x > 0:
        X = X + cfg.sigma_x * rng_noise.standard_normal(X.shape)
    Y = A.T @ w
    if cfg.sigma_y > 0:
        Y = Y + cfg.sigma_y * rng_noise.standard_normal(n)
    m = int(round(keep_prob * cfg.D))
    samples = []
    for i in range(n):
        if cfg.missingness == "bernoulli":
            idx = bernoulli_omega(rng_miss, cfg.D, keep_prob)
        else:
            idx = with_replacement_omega(rng_miss, cfg.D, m)
        samples.append(ObservedSample(idx, X[idx, i], float(Y[i])))
    empty = sum(1 for s in samples if s.m == 0)
    if empty:
        log.warning("%d samples have no observed entries", empty)
    return Dataset(cfg.D, samples)


def generate_synthetic(cfg):
    """Draw train, validation and test sets plus the generating parameters.

    Returns
    -------
    train, val, test : Dataset
    truth : GroundTruth
    """
    rng_truth = substream(cfg.seed, "truth")
    U = polar_factor(rng_truth.standard_normal((cfg.D, cfg.d)))
    w = np.zeros(cfg.d)
    support = rng_truth.choice(cfg.d, size=cfg.sparsity, replace=False)
    w[support] = rng_truth.standard_normal(cfg.sparsity)
    truth = GroundTruth(U, w)
    rng_data = substream(cfg.seed, "data")
    rng_noise = substream(cfg.seed, "noise")
    rng_miss = substream(cfg.seed, "missingness")
    train = _split(cfg, truth, cfg.n, cfg.p, rng_data, rng_noise, rng_miss)
    val = _split(cfg, truth, cfg.n_val, cfg.q, rng_data, rng_noise, rng_miss)
    test = _split(cfg, truth, cfg.n_test, cfg.q, rng_data, rng_noise, rng_miss)
    return train, val, test, truth
