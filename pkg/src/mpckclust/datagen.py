"""Seeded synthetic datasets."""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError
from .metric import Dataset

KINDS = ("uniform-cube", "gaussian-mixture", "line", "grid")


def generate(kind: str, n: int, d: int = 2, seed: int = 0, clusters: int = 4,
             spread: float = 1.0) -> Dataset:
    if n < 1 or d < 1:
        raise ParameterError("n and d must be positive")
    rng = np.random.default_rng(seed)
    if kind == "uniform-cube":
        pts = rng.random((n, d)) * 100
    elif kind == "gaussian-mixture":
        centers = rng.uniform(0, 100, size=(clusters, d))
        pts = centers[np.arange(n) % clusters] + rng.normal(0, spread, size=(n, d))
    elif kind == "line":
        pts = np.zeros((n, d))
        pts[:, 0] = np.sort(rng.uniform(0, n, size=n))
    elif kind == "grid":
        side = math.ceil(n ** (1 / d) - 1e-9)
        axes = np.meshgrid(*[np.arange(side, dtype=float)] * d, indexing="ij")
        pts = np.stack([a.ravel() for a in axes], axis=1)[:n]
    else:
        raise ParameterError(f"unknown dataset kind {kind!r}; choose from {', '.join(KINDS)}")
    return Dataset(pts)
