"""Deterministic k-means over L2-normalized embedding rows.

Determinism contract: for a fixed config, fit() returns bitwise-identical
centroids and assignments for any worker count. Assignment work is split
over fixed-size row blocks whose boundaries never depend on `workers`,
block results are combined in block order, and centroid sums run over
members in ascending row order.

Seeding is weighted sampling driven by a counter RNG keyed on
(seed, round, row-content hash), so a row carries its randomness with it:
permuting distinct input rows permutes the seeding choices identically.
Ties in seeding and assignment break toward the lowest index.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyInputError, NumericError, ValidationError
from .store import EmbeddingMatrix

AUTO = "auto"

# Rows per assignment block. Fixed: changing it changes float reduction
# order, and therefore the bitwise output.
_ASSIGN_BLOCK = 4096

_U64 = np.uint64
_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)


@dataclass(frozen=True)
class KMeansConfig:
    k: int | str = AUTO
    max_iters: int = 100
    rel_tol: float = 1e-4
    seed: int = 0


@dataclass
class ClusterModel:
    """Fitted centroids plus the assignment and objective trace."""

    k: int
    centroids: np.ndarray  # k x d, float64
    assignments: np.ndarray  # length n, int32, values in [0, k)
    objective: float
    objective_history: list[float] = field(default_factory=list)
    iterations_run: int = 0
    seed: int = 0

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def summary(self) -> dict:
        return {"k": self.k, "objective": self.objective, "seed": self.seed}


def resolve_auto_k(n: int) -> int:
    """Default cluster count: round(sqrt(n/2)), at least 1, at most n."""
    if n < 1:
        raise EmptyInputError("cannot choose k for an empty dataset")
    return min(n, max(1, round(math.sqrt(n / 2))))


def distance_to_centroid(row: np.ndarray, centroid: np.ndarray) -> float:
    """Cosine distance 1 - cos(row, centroid), clamped to [0, 2]."""
    row = np.asarray(row, dtype=np.float64)
    centroid = np.asarray(centroid, dtype=np.float64)
    if row.shape != centroid.shape:
        raise ValidationError(f"dimension mismatch: {row.shape} vs {centroid.shape}")
    cnorm = float(np.linalg.norm(centroid))
    if cnorm == 0.0:
        raise NumericError("centroid has zero norm")
    rnorm = float(np.linalg.norm(row))
    if rnorm == 0.0:
        raise NumericError("row has zero norm")
    cos = float(np.dot(row, centroid)) / (rnorm * cnorm)
    return float(np.clip(1.0 - cos, 0.0, 2.0))


def _mix64_int(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = z + _U64(_GOLDEN)
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def _row_hashes(values: np.ndarray) -> np.ndarray:
    """64-bit content hash per row, independent of row position."""
    bits = np.ascontiguousarray(values, dtype="<f4").view(np.uint32).astype(np.uint64)
    n, d = bits.shape
    h = np.full(n, _U64(_mix64_int(d)), dtype=np.uint64)
    for col in range(d):
        h = _mix64(h ^ (bits[:, col] + _U64(_mix64_int(col))))
    return h


def _uniforms(row_hash: np.ndarray, seed: int, round_no: int) -> np.ndarray:
    """Per-row uniforms in (0, 1) for one seeding round."""
    key = _U64(_mix64_int((seed & _MASK64) ^ _mix64_int(round_no + 1)))
    z = _mix64(row_hash ^ key)
    return ((z >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _dist_sq_to(values32: np.ndarray, centroid64: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance of every (unit) row to one centroid."""
    c32 = centroid64.astype(np.float32)
    t = values32 @ c32
    c2 = float(np.dot(centroid64, centroid64))
    d2 = 1.0 - 2.0 * t.astype(np.float64) + c2
    np.maximum(d2, 0.0, out=d2)
    return d2


def _seed_centroids(values32: np.ndarray, k: int, seed: int, row_hash: np.ndarray) -> np.ndarray:
    """Weighted farthest-first seeding via per-row exponential races.

    Round r picks argmin(-log(u_r) / D2); D2 is the running squared
    distance to the nearest chosen centroid, so the pick distribution
    matches squared-distance weighting while staying reproducible and
    content-keyed.
    """
    n, d = values32.shape
    chosen_mask = np.zeros(n, dtype=bool)
    d2: np.ndarray | None = None  # None means uniform weights (first round)
    centroids = np.empty((k, d), dtype=np.float64)
    for r in range(k):
        u = _uniforms(row_hash, seed, r)
        weights = np.ones(n, dtype=np.float64) if d2 is None else d2
        with np.errstate(divide="ignore", invalid="ignore"):
            keys = -np.log(u) / weights
        keys[chosen_mask] = np.inf
        j = int(np.argmin(keys))
        if not np.isfinite(keys[j]):
            # all remaining weight is zero: fall back to lowest unchosen index
            j = int(np.flatnonzero(~chosen_mask)[0])
        chosen_mask[j] = True
        centroids[r] = values32[j].astype(np.float64)
        fresh = _dist_sq_to(values32, centroids[r])
        d2 = fresh if d2 is None else np.minimum(d2, fresh)
        d2[chosen_mask] = 0.0
    return centroids


def _assign(
    values32: np.ndarray, centroids64: np.ndarray, workers: int
) -> tuple[np.ndarray, np.ndarray, float]:
    """Assign each row to its nearest centroid.

    Returns (assignments, per-row min squared distance, objective).
    Ties go to the lowest centroid index.
    """
    n = values32.shape[0]
    c32 = centroids64.astype(np.float32)
    c2 = np.einsum("ij,ij->i", centroids64, centroids64)

    def one_block(bounds: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        s, e = bounds
        t = values32[s:e] @ c32.T
        d2 = 1.0 - 2.0 * t.astype(np.float64) + c2[None, :]
        np.maximum(d2, 0.0, out=d2)
        a = np.argmin(d2, axis=1).astype(np.int32)
        return a, d2[np.arange(e - s), a]

    blocks = [(s, min(s + _ASSIGN_BLOCK, n)) for s in range(0, n, _ASSIGN_BLOCK)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_block, blocks))
    else:
        results = [one_block(b) for b in blocks]
    assignments = np.concatenate([r[0] for r in results])
    row_min = np.concatenate([r[1] for r in results])
    return assignments, row_min, float(np.sum(row_min))


def _update_centroids(
    values32: np.ndarray,
    assignments: np.ndarray,
    k: int,
    previous: np.ndarray,
    row_min: np.ndarray,
) -> np.ndarray:
    """Means over members in ascending row order; empty clusters steal the
    globally farthest point (ties to the lowest row index)."""
    d = values32.shape[1]
    centroids = np.empty((k, d), dtype=np.float64)
    counts = np.bincount(assignments, minlength=k)
    for c in range(k):
        members = np.flatnonzero(assignments == c)
        if members.size:
            centroids[c] = values32[members].sum(axis=0, dtype=np.float64) / members.size
        else:
            centroids[c] = previous[c]
    empties = np.flatnonzero(counts == 0)
    if empties.size:
        work = row_min.copy()
        for c in empties:
            j = int(np.argmax(work))
            if not np.isfinite(work[j]) or work[j] < 0:
                break
            centroids[c] = values32[j].astype(np.float64)
            work[j] = -np.inf
    return centroids


def fit(matrix: EmbeddingMatrix, config: KMeansConfig, workers: int = 1) -> ClusterModel:
    """Lloyd iteration with content-keyed weighted seeding.

    Stops at max_iters, on an exact assignment fixed point, or when the
    relative objective improvement drops below rel_tol. The final model
    always pairs centroids with assignments computed against them.
    """
    if matrix.n == 0:
        raise EmptyInputError("cannot cluster an empty matrix")
    if not matrix.normalized:
        raise ValidationError("fit requires an L2-normalized matrix")
    if config.max_iters < 1:
        raise ConfigError("max_iters must be >= 1")
    if config.rel_tol <= 0:
        raise ConfigError("rel_tol must be > 0")
    if config.k == AUTO:
        k = resolve_auto_k(matrix.n)
    else:
        k = int(config.k)
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k > matrix.n:
        raise ConfigError(f"k={k} exceeds the number of rows ({matrix.n})")
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    values = matrix.values
    row_hash = _row_hashes(values)
    centroids = _seed_centroids(values, k, config.seed, row_hash)

    history: list[float] = []
    prev_assign: np.ndarray | None = None
    assignments = np.zeros(matrix.n, dtype=np.int32)
    objective = 0.0
    iterations = 0

    for it in range(config.max_iters):
        assignments, row_min, objective = _assign(values, centroids, workers)
        iterations = it + 1
        if history and objective > history[-1] * (1.0 + 1e-9) + 1e-12:
            raise NumericError(
                f"objective increased from {history[-1]} to {objective}; Lloyd step regressed"
            )
        if prev_assign is not None and np.array_equal(assignments, prev_assign):
            if objective <= history[-1]:
                history.append(objective)
            break
        if history:
            improvement = history[-1] - objective
            if improvement < config.rel_tol * max(history[-1], 1e-300):
                if objective <= history[-1]:
                    history.append(objective)
                break
            history.append(objective)
        else:
            history.append(objective)
        if it == config.max_iters - 1:
            break  # keep centroids consistent with the final assignment
        prev_assign = assignments
        centroids = _update_centroids(values, assignments, k, centroids, row_min)

    return ClusterModel(
        k=k,
        centroids=centroids,
        assignments=assignments,
        objective=objective,
        objective_history=history,
        iterations_run=iterations,
        seed=config.seed,
    )
