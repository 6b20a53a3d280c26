import numpy as np
import pytest

from sparsemiss import Dataset, ObservedSample


def random_orthonormal(rng, D, d):
    Q, _ = np.linalg.qr(rng.standard_normal((D, d)))
    return Q


def random_sample(rng, D, m=None, label=True):
    m = rng.integers(1, D + 1) if m is None else m
    idx = np.sort(rng.choice(D, size=m, replace=False))
    y = float(rng.standard_normal()) if label else None
    return ObservedSample(idx, rng.standard_normal(m), y)


def low_rank_dataset(rng, D, d, n, p=1.0, w=None):
    """Noiseless ``x = U a``, ``y = w'a`` with entries kept with probability ``p``."""
    U = random_orthonormal(rng, D, d)
    w = rng.standard_normal(d) if w is None else w
    A = rng.standard_normal((d, n))
    X = U @ A
    samples = []
    for i in range(n):
        idx = np.flatnonzero(rng.random(D) < p) if p < 1 else np.arange(D)
        samples.append(ObservedSample(idx, X[idx, i], float(A[:, i] @ w)))
    return Dataset(D, samples), U, w, A


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# compiled kernels make the first example of a run slow
from hypothesis import settings

settings.register_profile("repo", deadline=None)
settings.load_profile("repo")
