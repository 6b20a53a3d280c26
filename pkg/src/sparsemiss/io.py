"""
Plain-text file formats: ``key = value`` configs, datasets and models.

Datasets come in two layouts:

``csv_dense``
    Header ``label,f0,f1,...``; one row per sample. An empty cell or ``NaN``
    marks a missing feature (an empty label cell means unlabeled).
``sparse_indexed``
    First line ``#D=<int>``; then one line per sample,
    ``label idx:val idx:val ...`` with 0-based indices. ``nan`` as the label
    means unlabeled.

Numbers are written with 17 significant digits so that save/load is exact.
"""
import math
from pathlib import Path

import numpy as np

from .datamodel import DataError, Dataset, ObservedSample
from .slrm import SlrmModel
from .datamodel import SubspaceEstimate

__all__ = [
    "fmt",
    "read_kv",
    "parse_value",
    "load_dataset",
    "save_dataset",
    "load_model",
    "save_model",
    "MODEL_HEADER",
]

MODEL_HEADER = "sparsemiss-model v1"
FORMATS = ("csv_dense", "sparse_indexed")


def fmt(x):
    return "%.17g" % x


def parse_value(text):
    """Parse a scalar config value: int, float, bool or bare string."""
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def read_kv(path):
    """Read a ``key = value`` file; comma-separated values become lists.

    ``#`` starts a comment. Duplicate keys are an error.
    """
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise DataError(f"{path}:{lineno}: empty key")
        if key in out:
            raise DataError(f"{path}:{lineno}: duplicate key {key!r}")
        if "," in value:
            out[key] = [parse_value(v) for v in value.split(",") if v.strip()]
        else:
            out[key] = parse_value(value)
    return out


def _float(text, where):
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{where}: cannot parse {text!r} as a number") from None


def load_dataset(path, format="csv_dense"):
    """Read a dataset file in one of the two supported layouts."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    lines = Path(path).read_text().splitlines()
    if format == "csv_dense":
        return _load_csv(path, lines)
    return _load_sparse(path, lines)


def _load_csv(path, lines):
    if not lines:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if header[0] != "label" or header[1:] != [f"f{j}" for j in range(len(header) - 1)]:
        raise DataError(f"{path}:1: header must be 'label,f0,f1,...'")
    D = len(header) - 1
    samples = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != D + 1:
            raise DataError(f"{path}:{lineno}: expected {D + 1} fields, found {len(cells)}")
        where = f"{path}:{lineno}"
        label = cells[0].strip()
        label = None if label == "" or label.lower() == "nan" else _float(label, where)
        idx, val = [], []
        for j, c in enumerate(cells[1:]):
            c = c.strip()
            if c == "" or c.lower() == "nan":
                continue
            v = _float(c, where)
            if not math.isfinite(v):
                raise DataError(f"{where}: non-finite value {c!r}")
            idx.append(j)
            val.append(v)
        samples.append(ObservedSample.create(idx, val, label))
    return Dataset(D, samples)


def _load_sparse(path, lines):
    if not lines or not lines[0].startswith("#D="):
        raise DataError(f"{path}:1: first line must be '#D=<int>'")
    try:
        D = int(lines[0][3:])
    except ValueError:
        raise DataError(f"{path}:1: bad dimension line {lines[0]!r}") from None
    samples = []
    for lineno, line in enumerate(lines[1:], 2):
        tokens = line.split()
        if not tokens:
            continue
        where = f"{path}:{lineno}"
        label = None if tokens[0].lower() == "nan" else _float(tokens[0], where)
        idx, val = [], []
        for tok in tokens[1:]:
            if ":" not in tok:
                raise DataError(f"{where}: expected 'idx:val', got {tok!r}")
            i, v = tok.split(":", 1)
            try:
                i = int(i)
            except ValueError:
                raise DataError(f"{where}: bad index {i!r}") from None
            if not 0 <= i < D:
                raise DataError(f"{where}: index {i} out of range for D={D}")
            v = _float(v, where)
            if not math.isfinite(v):
                raise DataError(f"{where}: non-finite value")
            idx.append(i)
            val.append(v)
        try:
            samples.append(ObservedSample.create(idx, val, label))
        except DataError as exc:
            raise DataError(f"{where}: {exc}") from None
    return Dataset(D, samples)


def save_dataset(ds, path, format="csv_dense"):
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    out = []
    if format == "csv_dense":
        out.append(",".join(["label"] + [f"f{j}" for j in range(ds.ambient_dim)]))
        for s in ds:
            cells = [""] * ds.ambient_dim
            for j, v in zip(s.indices, s.values):
                cells[j] = fmt(v)
            out.append(",".join(["" if s.label is None else fmt(s.label)] + cells))
    else:
        out.append(f"#D={ds.ambient_dim}")
        for s in ds:
            label = "nan" if s.label is None else fmt(s.label)
            out.append(" ".join([label] + [f"{j}:{fmt(v)}" for j, v in zip(s.indices, s.values)]))
    Path(path).write_text("\n".join(out) + "\n")


def save_model(model, path, method=None):
    """Write ``(U, w, gamma)``: header, ``D d gamma``, ``D`` rows of ``U``, then ``w``."""
    U = model.subspace.basis
    D, d = U.shape
    lines = [MODEL_HEADER if method is None else f"{MODEL_HEADER} {method}", f"{D} {d} {fmt(model.gamma)}"]
    lines += [" ".join(fmt(x) for x in row) for row in U]
    lines.append(" ".join(fmt(x) for x in model.weights))
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path):
    """Read a model file back as an :class:`~sparsemiss.slrm.SlrmModel`."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(MODEL_HEADER):
        raise DataError(f"{path}:1: not a model file (expected {MODEL_HEADER!r})")
    try:
        D, d, gamma = lines[1].split()
        D, d, gamma = int(D), int(d), float(gamma)
        U = np.array([[float(x) for x in lines[2 + j].split()] for j in range(D)])
        w = np.array([float(x) for x in lines[2 + D].split()])
    except (ValueError, IndexError):
        raise DataError(f"{path}: malformed model file") from None
    if U.shape != (D, d) or w.shape != (d,):
        raise DataError(f"{path}: model dimensions disagree with header")
    return SlrmModel(SubspaceEstimate(U), w, gamma)
