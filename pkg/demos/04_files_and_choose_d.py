"""
Working from files
==================

Datasets on disk come as dense CSV (empty cell = missing) or as sparse
``label idx:val`` lines. This walks through writing a dataset, picking the
subspace dimension from the data, training, and saving the model; the same
steps are available from the command line (see the end).
"""

import tempfile
from pathlib import Path

from sparsemiss import (Hyperparams, choose_d_by_variance, generate_synthetic, load_dataset, load_model,
                        save_dataset, save_model, test_mse, train)
from sparsemiss.synthetic import SyntheticConfig

work = Path(tempfile.mkdtemp())
cfg = SyntheticConfig(D=30, d=4, sparsity=2, n=1500, n_val=300, n_test=500,
                      sigma_x=0.01, sigma_y=0.01, p=0.8, q=0.8, seed=7)
train_ds, val_ds, test_ds, _ = generate_synthetic(cfg)

save_dataset(train_ds, work / "train.csv", "csv_dense")
save_dataset(val_ds, work / "val.txt", "sparse_indexed")
print((work / "train.csv").read_text().splitlines()[1][:80], "...")
print((work / "val.txt").read_text().splitlines()[1][:80], "...")

# Round trips are exact: numbers are written with 17 significant digits.
assert load_dataset(work / "train.csv", "csv_dense") == train_ds

###############################################################################
# Choosing d
# ----------
# Zero-fill a few hundred samples and keep enough singular directions to
# explain a given share of the energy. Zero-filling is itself a large
# perturbation: with 20% of the entries missing the energy outside the signal
# subspace is far above the feature noise, and the usual 99% rule keeps most
# of the directions. On complete data the rule is sharp.

loaded = load_dataset(work / "train.csv")
for threshold in (0.8, 0.9, 0.99):
    print(f"threshold {threshold}: d = {choose_d_by_variance(loaded, threshold, max_samples=500)}")
complete = generate_synthetic(SyntheticConfig(**{**cfg.__dict__, "p": 1.0}))[0]
print("complete data, threshold 0.99: d =", choose_d_by_variance(complete, 0.99), "(true d:", cfg.d, ")")
d = choose_d_by_variance(loaded, threshold=0.8, max_samples=500)

model = train(train_ds, load_dataset(work / "val.txt", "sparse_indexed"), d, Hyperparams(lambda1=10, max_passes=3, seed=7))
save_model(model, work / "slrm.model", method="SLRM")
back = load_model(work / "slrm.model")
print("test MSE from the reloaded model:", test_mse(back.subspace, back.weights, back.gamma, test_ds))

###############################################################################
# The same from a shell
# ---------------------
#
# .. code-block:: sh
#
#     sparsemiss gen --set D=30 --set d=4 --set sparsity=2 --seed 7 --out data
#     sparsemiss choose-d --data data/train.csv
#     sparsemiss train --train data/train.csv --val data/val.csv --d 4 \
#         --set lambda1=1,10 --set max_passes=3 --out slrm.model
#     sparsemiss eval --model slrm.model --test data/test.csv
