"""Point sets and distance oracles.

Three oracle kinds share one interface:

* ``EuclideanOracle``: l2 distances between the rows of a :class:`Dataset`;
* ``MatrixOracle``: an explicit symmetric distance matrix;
* ``DistortedOracle``: a base oracle whose ordered pairs are stretched by
  independent multipliers in ``[1, gamma**2]``.

All distance work goes through row blocks, so an instance never needs more
than ``BLOCK_BUDGET`` floats at once unless the full matrix is small enough to
keep (``CACHE_LIMIT`` points).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DegenerateDatasetError, ParameterError

REL_TOL = 1e-9
CACHE_LIMIT = 4096
BLOCK_BUDGET = 1 << 22


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ParameterError(f"points must form a non-empty n x d array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ParameterError("points contain NaN or infinite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def ids(self) -> np.ndarray:
        return np.arange(self.n)

    def scaled(self, c: float) -> "Dataset":
        return Dataset(self.points * c)


def _block_size(n: int) -> int:
    return max(1, min(n, BLOCK_BUDGET // max(n, 1)))


class DistanceOracle:
    """Common interface. Subclasses implement ``_rows``."""

    kind = "abstract"
    symmetric = True

    def __init__(self, n: int, z: int = 1):
        if int(z) != z or z < 1:
            raise ParameterError(f"z must be an integer >= 1, got {z}")
        self.n = int(n)
        self.z = int(z)
        self._full: np.ndarray | None = None

    def _rows(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _freeze_full(self):
        if self.n <= CACHE_LIMIT:
            full = self._rows(np.arange(self.n))
            full.setflags(write=False)
            self._full = full

    def _check_ids(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.n):
            raise IndexError(f"point id out of range [0, {self.n})")
        return ids

    def rows(self, rows) -> np.ndarray:
        """Distances from each id in ``rows`` to every point, shape (len(rows), n)."""
        rows = self._check_ids(np.atleast_1d(rows))
        if self._full is not None:
            return self._full[rows]
        return self._rows(rows)

    def submatrix(self, rows, cols) -> np.ndarray:
        cols = self._check_ids(np.atleast_1d(cols))
        return self.rows(rows)[:, cols]

    def dist(self, p: int, q: int) -> float:
        return float(self.rows([p])[0, self._check_ids([q])[0]])

    def matrix(self) -> np.ndarray:
        if self._full is not None:
            return self._full
        return self._rows(np.arange(self.n))

    def blocks(self, rows=None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield ``(row_ids, distance_block)`` covering ``rows`` (default: all)."""
        rows = np.arange(self.n) if rows is None else self._check_ids(np.atleast_1d(rows))
        step = _block_size(self.n)
        for start in range(0, len(rows), step):
            idx = rows[start:start + step]
            yield idx, self.rows(idx)

    def with_z(self, z: int) -> "DistanceOracle":
        raise NotImplementedError


class EuclideanOracle(DistanceOracle):
    kind = "euclidean"

    def __init__(self, dataset: Dataset, z: int = 1):
        if not isinstance(dataset, Dataset):
            dataset = Dataset(dataset)
        super().__init__(dataset.n, z)
        self.dataset = dataset
        self._freeze_full()

    def _rows(self, rows):
        pts = self.dataset.points
        out = np.empty((len(rows), self.n))
        # broadcasting keeps distances exact for integer-like inputs; the
        # |a|^2 + |b|^2 - 2ab shortcut does not
        step = max(1, BLOCK_BUDGET // max(self.n * self.dataset.dim, 1))
        for s in range(0, len(rows), step):
            diff = pts[rows[s:s + step], None, :] - pts[None, :, :]
            out[s:s + step] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        return out

    def with_z(self, z):
        return EuclideanOracle(self.dataset, z)

    def scaled(self, c: float) -> "EuclideanOracle":
        return EuclideanOracle(self.dataset.scaled(c), self.z)


class MatrixOracle(DistanceOracle):
    kind = "matrix"

    def __init__(self, matrix, z: int = 1, check: bool = True):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ParameterError(f"distance matrix must be square and non-empty, got {m.shape}")
        if check:
            if not np.all(np.isfinite(m)) or np.any(m < 0):
                raise ParameterError("distance matrix must be finite and nonnegative")
            if np.any(np.diag(m) != 0):
                raise ParameterError("distance matrix must have a zero diagonal")
            scale = max(float(m.max()), 1.0)
            if not np.allclose(m, m.T, rtol=REL_TOL, atol=REL_TOL * scale):
                raise ParameterError("distance matrix must be symmetric")
        super().__init__(m.shape[0], z)
        m.setflags(write=False)
        self._full = m

    def _rows(self, rows):
        return self._full[rows]

    def with_z(self, z):
        return MatrixOracle(self._full, z, check=False)

    def scaled(self, c: float) -> "MatrixOracle":
        return MatrixOracle(self._full * c, self.z, check=False)


class DistortedOracle(DistanceOracle):
    """``d~(p, q) = m(p, q) * dist(p, q)`` with ``m`` drawn per ordered pair.

    Row ``p`` of the multipliers comes from a generator seeded with
    ``(seed, p)``, so any row can be regenerated on demand and the oracle is a
    pure function of ``(base, gamma, seed, log_uniform)``.
    """

    kind = "distorted"
    symmetric = False

    def __init__(self, base: DistanceOracle, gamma: float, seed: int, log_uniform: bool = False):
        if isinstance(base, DistortedOracle):
            raise ParameterError("distort expects an undistorted base oracle")
        if not gamma >= 1:
            raise ParameterError(f"gamma must be >= 1, got {gamma}")
        super().__init__(base.n, base.z)
        self.base = base
        self.gamma = float(gamma)
        self.seed = int(seed)
        self.log_uniform = bool(log_uniform)
        self._freeze_full()

    def multipliers(self, rows) -> np.ndarray:
        rows = np.atleast_1d(rows)
        hi = self.gamma ** 2
        out = np.empty((len(rows), self.n))
        for i, p in enumerate(rows):
            rng = np.random.default_rng([self.seed, int(p)])
            u = rng.random(self.n)
            out[i] = hi ** u if self.log_uniform else 1.0 + (hi - 1.0) * u
        return out

    def _rows(self, rows):
        return self.base.rows(rows) * self.multipliers(rows)

    def with_z(self, z):
        return DistortedOracle(self.base.with_z(z), self.gamma, self.seed, self.log_uniform)


def distort(base: DistanceOracle, gamma: float, seed: int, log_uniform: bool = False) -> DistortedOracle:
    return DistortedOracle(base, gamma, seed, log_uniform)


def powz_dist(oracle: DistanceOracle, p: int, q: int, z: int | None = None) -> float:
    z = oracle.z if z is None else z
    return oracle.dist(p, q) ** z


def pair_extremes(oracle: DistanceOracle) -> tuple[float, float]:
    """(min, max) distance over ordered pairs p != q. Returns (inf, 0) for n = 1."""
    lo, hi = np.inf, 0.0
    for idx, block in oracle.blocks():
        if oracle.n > 1:
            masked = block.copy()
            masked[np.arange(len(idx)), idx] = np.inf
            lo = min(lo, float(masked.min()))
        hi = max(hi, float(block.max()))
    return lo, hi


def aspect_ratio(oracle: DistanceOracle) -> float:
    lo, hi = pair_extremes(oracle)
    if oracle.n < 2:
        return 1.0
    if lo <= 0:
        return np.inf
    return hi / lo


def is_normalized(oracle: DistanceOracle) -> bool:
    """True when every off-diagonal distance is at least 2 (relative tolerance)."""
    if oracle.n < 2:
        return True
    lo, _ = pair_extremes(oracle)
    return lo >= 2.0 * (1 - REL_TOL)


def _normalizing_scale(lo: float, hi: float) -> float:
    if hi == 0:
        raise DegenerateDatasetError("all points are identical; OPT = 0 must be handled by the caller")
    if lo == 0:
        raise DegenerateDatasetError("dataset contains duplicate points; deduplicate before normalizing")
    return 2.0 / lo


def normalize_dataset(P: Dataset) -> tuple[Dataset, float, float]:
    """Scale ``P`` so its minimum pairwise distance is 2. Returns (scaled, scale, aspect ratio)."""
    if P.n < 2:
        raise DegenerateDatasetError("need at least two distinct points to normalize")
    lo, hi = pair_extremes(EuclideanOracle(P))
    scale = _normalizing_scale(lo, hi)
    out = P.scaled(scale)
    return out, scale, hi / lo


def normalize_oracle(oracle: DistanceOracle) -> tuple[DistanceOracle, float, float]:
    """Oracle-level counterpart of :func:`normalize_dataset` (euclidean or matrix kinds)."""
    if oracle.n < 2:
        raise DegenerateDatasetError("need at least two distinct points to normalize")
    if isinstance(oracle, DistortedOracle):
        raise ParameterError("normalize the base oracle, then distort")
    lo, hi = pair_extremes(oracle)
    scale = _normalizing_scale(lo, hi)
    return oracle.scaled(scale), scale, hi / lo


def unique_rows(P: Dataset) -> tuple[Dataset, np.ndarray]:
    """Drop duplicate points. Returns the reduced dataset and, per original id, its new id."""
    uniq, first, inverse = np.unique(P.points, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first)
    relabel = np.empty_like(order)
    relabel[order] = np.arange(len(order))
    return Dataset(uniq[order]), relabel[inverse.ravel()]
