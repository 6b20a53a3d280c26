"""
Core data types: partially observed samples, datasets, subspace estimates
and training hyperparameters.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "DataError",
    "NumericalError",
    "ObservedSample",
    "Dataset",
    "SubspaceEstimate",
    "Hyperparams",
    "Violation",
    "validate_dataset",
    "densify",
]


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


@dataclass(frozen=True, eq=False)
class ObservedSample:
    """One data point seen only on the coordinates ``indices``.

    The constructor stores ``indices`` exactly as given so that malformed
    samples can still be represented and reported by
    :func:`validate_dataset`. Use :meth:`create` to build a canonical sample
    (sorted, deduplicated, checked).
    """

    indices: np.ndarray
    values: np.ndarray
    label: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).reshape(-1))
        if self.label is not None:
            object.__setattr__(self, "label", float(self.label))

    @classmethod
    def create(cls, indices, values, label=None):
        """Build a sample with sorted, duplicate-free observed indices.

        Raises
        ------
        DataError
            If lengths differ, a repeated index carries two different values,
            or a value is not finite.
        """
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        val = np.asarray(values, dtype=float).reshape(-1)
        if idx.shape != val.shape:
            raise DataError(f"{idx.size} indices but {val.size} values")
        if not np.all(np.isfinite(val)):
            raise DataError("observed values must be finite")
        order = np.argsort(idx, kind="stable")
        idx, val = idx[order], val[order]
        if idx.size > 1:
            dup = idx[1:] == idx[:-1]
            if np.any(dup):
                if np.any(val[1:][dup] != val[:-1][dup]):
                    raise DataError("repeated index with conflicting values")
                keep = np.concatenate(([True], ~dup))
                idx, val = idx[keep], val[keep]
        return cls(idx, val, label)

    @property
    def m(self):
        return int(self.indices.size)

    def __eq__(self, other):
        if not isinstance(other, ObservedSample):
            return NotImplemented
        same_label = (self.label is None and other.label is None) or (
            self.label is not None and other.label is not None and self.label == other.label
        )
        return (
            same_label
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered collection of samples living in ``R^ambient_dim``."""

    ambient_dim: int
    samples: Sequence[ObservedSample] = field(default_factory=tuple)

    def __post_init__(self):
        if int(self.ambient_dim) < 1:
            raise DataError("ambient_dim must be >= 1")
        object.__setattr__(self, "ambient_dim", int(self.ambient_dim))
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.ambient_dim == other.ambient_dim
            and len(self) == len(other)
            and all(a == b for a, b in zip(self.samples, other.samples))
        )

    __hash__ = None

    @property
    def is_labeled(self):
        return all(s.label is not None for s in self.samples)

    @cached_property
    def labels(self):
        """Labels as a float array; NaN where a sample is unlabeled."""
        return np.array([np.nan if s.label is None else s.label for s in self.samples], dtype=float)

    @cached_property
    def mask(self):
        """Boolean ``D x n`` observation mask."""
        out = np.zeros((self.ambient_dim, len(self)), dtype=bool)
        for i, s in enumerate(self.samples):
            out[s.indices, i] = True
        return out

    @cached_property
    def zero_filled(self):
        """Read-only cached ``dense(0.0)``."""
        out = self.dense(0.0)
        out.setflags(write=False)
        return out

    def dense(self, fill=0.0):
        """``D x n`` matrix of observed values with ``fill`` elsewhere."""
        out = np.full((self.ambient_dim, len(self)), fill, dtype=float)
        for i, s in enumerate(self.samples):
            out[s.indices, i] = s.values
        return out

    def require_labels(self, what="dataset"):
        missing = [i for i, s in enumerate(self.samples) if s.label is None]
        if missing:
            raise DataError(f"{what} has {len(missing)} unlabeled samples (first at position {missing[0]})")


@dataclass(frozen=True, eq=False)
class SubspaceEstimate:
    """A ``D x d`` basis with orthonormal columns."""

    basis: np.ndarray
    tol: float = 1e-8

    def __post_init__(self):
        U = np.array(self.basis, dtype=float)
        if U.ndim != 2 or U.shape[1] < 1 or U.shape[1] > U.shape[0]:
            raise ValueError(f"basis must be D x d with 1 <= d <= D, got shape {U.shape}")
        err = np.linalg.norm(U.T @ U - np.eye(U.shape[1]))
        if not err <= self.tol:
            raise ValueError(f"basis columns are not orthonormal (||U'U - I||_F = {err:.3e})")
        U.setflags(write=False)
        object.__setattr__(self, "basis", U)

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def intrinsic_dim(self):
        return self.basis.shape[1]


@dataclass(frozen=True)
class Hyperparams:
    """Training knobs shared by SLRM and SMPCR.

    ``validation_period=None`` means ``max(1, n // 10)`` samples between
    validation checkpoints; 1 validates after every sample.
    """

    lambda1: float = 1.0
    lambda2: float = 1e-3
    lambda3: float = 0.0
    delta_rls: float = 1.0
    gamma: float = 0.99
    rho: float = 0.02
    rho_constant_rounds: int = 1000
    max_passes: int = 10
    validation_period: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")
        if not self.delta_rls > 0:
            raise ValueError("delta_rls must be positive")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.rho_constant_rounds < 0:
            raise ValueError("rho_constant_rounds must be nonnegative")
        if self.max_passes < 0:
            raise ValueError("max_passes must be nonnegative")
        if self.validation_period is not None and self.validation_period < 1:
            raise ValueError("validation_period must be positive")

    def period_for(self, n):
        if self.validation_period is not None:
            return int(self.validation_period)
        return max(1, n // 10)


class Violation(NamedTuple):
    sample: int
    reason: str


def validate_dataset(ds):
    """List every invariant violation in ``ds``; empty when well formed."""
    D = ds.ambient_dim
    out = []
    for i, s in enumerate(ds.samples):
        idx = np.asarray(s.indices)
        if idx.size != np.asarray(s.values).size:
            out.append(Violation(i, "values length differs from indices length"))
        if idx.size > 1:
            steps = np.diff(idx)
            if np.any(steps < 0):
                out.append(Violation(i, "indices not sorted"))
            if np.any(steps == 0):
                out.append(Violation(i, "duplicate index"))
        if idx.size and (idx.min() < 0 or idx.max() >= D):
            out.append(Violation(i, "index out of range"))
        if not np.all(np.isfinite(s.values)):
            out.append(Violation(i, "non-finite value"))
        if s.label is not None and not np.isfinite(s.label):
            out.append(Violation(i, "non-finite label"))
    return out


def densify(sample, D, fill=0.0):
    """Embed ``sample`` in ``R^D``, writing ``fill`` at unobserved coordinates."""
    idx = sample.indices
    if idx.size != sample.values.size or (idx.size and (idx.min() < 0 or idx.max() >= D)):
        raise DataError(f"sample does not fit in dimension {D}")
    out = np.full(D, fill, dtype=float)
    out[idx] = sample.values
    return out
