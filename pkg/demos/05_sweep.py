"""
Sweeping a data parameter
=========================

A sweep spec fixes a synthetic configuration, varies one field, and lists the
methods, seeds and a validation grid. For every (value, method, seed) cell
each grid point is trained and the one with the lowest hold-out error is
tested. The full desk-scale sweeps used for the acceptance checks are in
``demos/specs``; run one with ``sparsemiss sweep demos/specs/n_noiseless.cfg
--out out_n`` (a few minutes).
"""

import csv
import tempfile
from pathlib import Path

from sparsemiss import run_experiment

spec = {
    "sweep_var": "n",
    "sweep_values": [200, 400, 800],
    "D": 20, "d": 6, "sparsity": 3,
    "p": 0.7, "q": 0.75, "n_val": 300, "n_test": 500,
    "lambda1": [1, 10], "lambda2": 1e-5, "max_passes": 3, "gamma": 0.99,
    "methods": ["SLRM", "SMPCR"],
    "seeds": [0, 1, 2],
}

out = Path(tempfile.mkdtemp())
for r in run_experiment(spec, output_dir=out):
    print(f"n={r.value:<5} {r.method:<6} median MSE {r.median_mse:.3e}  (per seed: "
          + ", ".join(f"{x:.1e}" for x in r.mses) + ")")

###############################################################################
# The long-format file is ready for plotting, one row per cell

with open(out / "cells.csv") as fh:
    rows = list(csv.DictReader(fh))
print(list(rows[0]))
print(len(rows), "cells")

# and selected.csv records which grid point won in each cell
print((out / "selected.csv").read_text().splitlines()[:3])
