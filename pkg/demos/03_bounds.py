"""
Evaluating the generalization bound
===================================

The risk bound depends on the sample size n, the number of observed entries
per sample m, the ambient dimension D, the l1 radius of the weights and the
threshold parameter gamma of the predictor. The gamma lower bound says how
small gamma may be before the predictor's conditioning test starts failing
on random observation patterns.
"""

import math

import numpy as np
from scipy.linalg import hadamard

from sparsemiss import BoundParams, coherence, gamma_lower_bound, inverse_gram_norm, rademacher_bound, theorem1_rhs

p = BoundParams(n=10_000, m=10, D=20, R1=1.0, B_X=1.0, B_Y=1.0, gamma=0.5, delta_prob=0.05, empirical_loss=0.1)
print("loss range b:      ", p.b)
print("Rademacher bound:  ", rademacher_bound(p.n, p.m, p.D, p.R1, p.B_X, p.gamma))
print("risk bound:        ", theorem1_rhs(p))

###############################################################################
# The bound shrinks like log(n)^3 / n once n is large

for n in (10**3, 10**4, 10**5, 10**6, 10**7):
    q = BoundParams(**{**p.__dict__, "n": n})
    print(f"n = {n:>8}: {theorem1_rhs(q):12.4f}")

###############################################################################
# Coherence and the smallest admissible gamma
# -------------------------------------------
# Columns of a normalized Hadamard matrix spread their energy evenly over
# the coordinates, so their coherence is 1, the smallest possible value.

D, d, m, delta = 64, 2, 32, 0.1
U = hadamard(D)[:, 1:d + 1] / math.sqrt(D)
mu = coherence(U)
g1 = gamma_lower_bound(d, mu, m, delta)
limit = D / (m * (1 - g1))
print(f"mu = {mu:.3f}, gamma_1 = {g1:.3f}, threshold on ||(U_O'U_O)^-1|| = {limit:.2f}")

# How often does a random observation pattern of m draws break the threshold?
rng = np.random.default_rng(0)
norms = np.array([inverse_gram_norm(U, rng.integers(0, D, m)) for _ in range(2000)])
print(f"fraction above the threshold: {np.mean(norms > limit):.4f} (allowed {delta})")

# With d = 4 the same m is too small: gamma_1 exceeds 1 and no valid
# threshold exists.
print("gamma_1 for d = 4:", gamma_lower_bound(4, 1.0, m, delta))
