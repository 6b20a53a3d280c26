"""
Regression when most features are missing
=========================================

Each sample shows only a random subset of its features, but the features all
lie near a low-dimensional subspace. SLRM learns that subspace and a sparse
weight vector together, one sample at a time.
"""

import numpy as np

from sparsemiss import Hyperparams, generate_synthetic, predict, train
from sparsemiss.synthetic import SyntheticConfig

# A 20-dimensional feature space with a 6-dimensional signal subspace; the
# label depends on 3 of the 6 latent coordinates. Training samples keep 70%
# of their entries, validation and test samples 75%.
cfg = SyntheticConfig(D=20, d=6, sparsity=3, n=2000, n_val=300, n_test=1000,
                      sigma_x=0.05, sigma_y=0.05, p=0.7, q=0.75, seed=1)
train_ds, val_ds, test_ds, truth = generate_synthetic(cfg)

s = train_ds[0]
print("observed coordinates of the first sample:", s.indices)
print("its label:", round(s.label, 3))

###############################################################################
# Training
# --------
# ``lambda1`` weighs reconstruction against the label when coding a sample,
# ``lambda2`` is the l1 penalty on the weights. The best model on the
# hold-out set is kept.

hp = Hyperparams(lambda1=10, lambda2=1e-3, max_passes=3, seed=1)
model = train(train_ds, val_ds, cfg.d, hp)
print("validation MSE:", model.best_validation_error)
print("test MSE:      ", model.mse(test_ds))
print("label variance:", np.var(test_ds.labels))

###############################################################################
# How close is the learned subspace?
# ----------------------------------
# The principal angles between span(U) and the true subspace come from the
# singular values of U' U_*.

cosines = np.linalg.svd(model.subspace.basis.T @ truth.U, compute_uv=False)
print("largest principal angle (rad):", np.arccos(np.clip(cosines.min(), -1, 1)))

###############################################################################
# Predicting one sample
# ---------------------
# The predictor projects the observed entries onto the subspace and answers 0
# when the restricted Gram matrix is too badly conditioned to trust.

t = test_ds[0]
p = predict(model.subspace, model.weights, model.gamma, t)
print(f"prediction {p.value:.3f} (label {t.label:.3f}), indicator passed: {p.indicator_passed}")

few = type(t)(t.indices[:3], t.values[:3], t.label)
print("with only 3 observed entries:", predict(model.subspace, model.weights, model.gamma, few))
