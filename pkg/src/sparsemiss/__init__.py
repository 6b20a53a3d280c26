"""
Sparse linear regression on partially observed features.

The features are assumed to lie near a low-dimensional subspace. SLRM learns
the subspace and a sparse regressor jointly from a stream of partially
observed, labeled samples; SMPCR is the two-stage baseline that fits the
subspace without labels first.
"""
from .datamodel import (
    DataError,
    Dataset,
    Hyperparams,
    NumericalError,
    ObservedSample,
    SubspaceEstimate,
    densify,
    validate_dataset,
)
from .experiment import ExperimentResult, choose_d_by_variance, run_experiment
from .io import load_dataset, load_model, save_dataset, save_model
from .numerics import RankDeficientError, orthonormalize_polar, polar_factor, prox_l1, solve_spd, svd_init
from .petrels import RlsState, modified_petrels_step, rls_init, rls_stream_equivalence_check
from .predictor import Prediction, predict, predict_batch, test_mse
from .slrm import SlrmModel, initialize, solve_alpha, train
from .smpcr import SmpcrModel, smpcr_stage1, smpcr_stage2, smpcr_train
from .synthetic import GroundTruth, SyntheticConfig, generate_synthetic
from .theory import BoundParams, coherence, gamma_lower_bound, inverse_gram_norm, rademacher_bound, theorem1_rhs

__version__ = "0.1.0"
