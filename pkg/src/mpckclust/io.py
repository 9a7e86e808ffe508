"""Dataset files: CSV (one point per row) or JSON array-of-arrays; distance matrices as CSV."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .metric import Dataset, MatrixOracle


def load_dataset(path) -> Dataset:
    path = Path(path)
    if path.suffix.lower() == ".json":
        return Dataset(np.asarray(json.loads(path.read_text()), dtype=float))
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    if rows.size == 0:
        raise ParameterError(f"{path} holds no points")
    return Dataset(rows)


def save_dataset(P: Dataset, path):
    """Write with full float precision; identical data gives identical bytes."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(P.points.tolist()) + "\n")
    else:
        lines = [",".join(repr(float(v)) for v in row) for row in P.points]
        path.write_text("\n".join(lines) + "\n")


def load_matrix(path) -> MatrixOracle:
    return MatrixOracle(np.loadtxt(path, delimiter=",", ndmin=2))
