"""Outlier removal and semantic deduplication over a fitted cluster model.

Within each cluster the scan order is fixed: items are visited by
ascending row index; for a surviving pair (j, k), j < k, with similarity
strictly above eta, the member farther from the cluster centroid is
deleted (exact distance ties keep the lower row index). One full pass
reaches a fixed point: any pair left intact was compared while both
members were alive, so extra passes delete nothing.

Clusters are independent and may be pruned by several workers; the pair
scan inside a cluster is sequential, so output is identical for any
worker count.
"""

from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import ClusterModel, KMeansConfig
from .errors import (
    ConfigError,
    ConsistencyError,
    DomainError,
    EmptyInputError,
    NumericError,
    ValidationError,
)
from .store import EmbeddingMatrix, ItemManifest

# Clusters at most this large get a full pairwise similarity matrix;
# larger ones fall back to one row of similarities per scan step.
_GRAM_LIMIT = 3000

RANDOM_SENTINEL = "RANDOM"


class Status(str, enum.Enum):
    KEPT = "KEPT"
    OUTLIER = "OUTLIER"
    DUPLICATE = "DUPLICATE"


@dataclass(frozen=True)
class PruneConfig:
    eta: float
    epsilon: float = 0.9
    max_iterations: int = 1
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)

    def __post_init__(self) -> None:
        if not -1.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must be in [-1, 1], got {self.eta}")
        if not 0.0 <= self.epsilon <= 2.0:
            raise ConfigError(f"epsilon must be in [0, 2], got {self.epsilon}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")

    def as_dict(self) -> dict:
        return {
            "eta": self.eta,
            "epsilon": self.epsilon,
            "max_iterations": self.max_iterations,
            "kmeans": {
                "k": self.kmeans.k,
                "max_iters": self.kmeans.max_iters,
                "rel_tol": self.kmeans.rel_tol,
                "seed": self.kmeans.seed,
            },
        }


@dataclass
class PruneDecision:
    item_id: str
    status: Status
    cluster: int
    dist_to_centroid: float
    duplicate_of: str | None = None


@dataclass
class PruneManifest:
    """One decision per input item plus run provenance."""

    decisions: list[PruneDecision]
    config: PruneConfig
    retained: int
    retention_ratio: float
    cluster_model_summary: dict
    method: str = "semantic"

    def kept_ids(self) -> list[str]:
        return [d.item_id for d in self.decisions if d.status is Status.KEPT]

    def to_json_dict(self) -> dict:
        decisions = []
        for d in self.decisions:
            rec: dict = {
                "id": d.item_id,
                "status": d.status.value,
                "cluster": d.cluster,
                "dist": d.dist_to_centroid,
            }
            if d.duplicate_of is not None:
                rec["duplicate_of"] = d.duplicate_of
            decisions.append(rec)
        return {
            "version": 1,
            "method": self.method,
            "config": self.config.as_dict(),
            "retained": self.retained,
            "retention_ratio": self.retention_ratio,
            "kmeans": self.cluster_model_summary,
            "decisions": decisions,
        }


def save_manifest(manifest: PruneManifest, path: Path | str) -> None:
    Path(path).write_text(json.dumps(manifest.to_json_dict(), indent=2) + "\n", encoding="utf-8")


def write_keep_list(manifest: PruneManifest, path: Path | str) -> None:
    Path(path).write_text("".join(i + "\n" for i in manifest.kept_ids()), encoding="utf-8")


def cosine_similarity(p: np.ndarray, q: np.ndarray) -> float:
    """Cosine of the angle between p and q, clamped to [-1, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValidationError(f"dimension mismatch: {p.shape} vs {q.shape}")
    np_, nq = float(np.linalg.norm(p)), float(np.linalg.norm(q))
    if np_ == 0.0 or nq == 0.0:
        raise NumericError("cosine similarity is undefined for a zero vector")
    return float(np.clip(float(np.dot(p, q)) / (np_ * nq), -1.0, 1.0))


_KEPT, _OUTLIER, _DUPLICATE = 0, 1, 2


def _prune_cluster(
    values32: np.ndarray,
    members: np.ndarray,
    centroid: np.ndarray,
    cluster_index: int,
    eta: float,
    epsilon: float,
    max_iterations: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Greedy scan over one cluster.

    Returns (status codes, local duplicate-target index or -1, centroid
    distances), all aligned with `members`.
    """
    m = members.size
    rows = values32[members].astype(np.float64)
    cnorm = float(np.linalg.norm(centroid))
    if cnorm == 0.0:
        raise NumericError(f"cluster {cluster_index} has a zero centroid")
    dists = 1.0 - rows @ (np.asarray(centroid, dtype=np.float64) / cnorm)
    np.clip(dists, 0.0, 2.0, out=dists)

    status = np.full(m, _KEPT, dtype=np.uint8)
    dup_of = np.full(m, -1, dtype=np.int64)
    outliers = dists > epsilon
    status[outliers] = _OUTLIER
    alive = ~outliers

    gram = None
    if m <= _GRAM_LIMIT:
        gram = rows @ rows.T
        np.clip(gram, -1.0, 1.0, out=gram)

    for _ in range(max_iterations):
        deleted_any = False
        for j in range(m):
            if not alive[j]:
                continue
            if gram is not None:
                sims = gram[j, j + 1 :]
            else:
                sims = rows[j + 1 :] @ rows[j]
                np.clip(sims, -1.0, 1.0, out=sims)
            hits = np.flatnonzero((sims > eta) & alive[j + 1 :]) + (j + 1)
            if not hits.size:
                continue
            # Scanning hits in ascending order: every hit at distance >=
            # dist[j] dies to j; the first strictly-closer hit kills j.
            closer = dists[hits] < dists[j]
            stop = int(np.argmax(closer)) if closer.any() else hits.size
            victims = hits[:stop]
            if victims.size:
                alive[victims] = False
                status[victims] = _DUPLICATE
                dup_of[victims] = j
                deleted_any = True
            if stop < hits.size:
                killer = int(hits[stop])
                alive[j] = False
                status[j] = _DUPLICATE
                dup_of[j] = killer
                deleted_any = True
        if not deleted_any:
            break
    return status, dup_of, dists


def prune(
    matrix: EmbeddingMatrix,
    manifest: ItemManifest,
    clusters: ClusterModel,
    config: PruneConfig,
    workers: int = 1,
) -> PruneManifest:
    """Apply the outlier filter and per-cluster dedup scan.

    Stage 1 marks OUTLIER every item whose cosine distance to its cluster
    centroid exceeds epsilon (strict). Stage 2 runs the greedy
    delete-the-farther scan with similarity threshold eta (strict), up to
    config.max_iterations passes. Duplicate links are flattened so
    duplicate_of always names an item whose final status is KEPT.
    """
    n = matrix.n
    if n == 0:
        raise EmptyInputError("nothing to prune: matrix has no rows")
    if not matrix.normalized:
        raise ValidationError("prune requires an L2-normalized matrix")
    manifest.validate(n)
    if clusters.assignments.shape[0] != n:
        raise ConsistencyError(
            f"cluster model covers {clusters.assignments.shape[0]} rows, matrix has {n}"
        )
    if clusters.centroids.shape[1] != matrix.d:
        raise ConsistencyError(
            f"cluster model dimension {clusters.centroids.shape[1]} != matrix dimension {matrix.d}"
        )
    if clusters.assignments.size and int(clusters.assignments.max()) >= clusters.k:
        raise ConsistencyError("assignment index out of range for cluster count")
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    status = np.empty(n, dtype=np.uint8)
    dup_row = np.full(n, -1, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)

    member_lists = [np.flatnonzero(clusters.assignments == c) for c in range(clusters.k)]

    def run_cluster(c: int) -> None:
        members = member_lists[c]
        if not members.size:
            return
        st, local_dup, dd = _prune_cluster(
            matrix.values, members, clusters.centroids[c], c,
            config.eta, config.epsilon, config.max_iterations,
        )
        status[members] = st
        dists[members] = dd
        has_dup = local_dup >= 0
        dup_row[members[has_dup]] = members[local_dup[has_dup]]

    populated = [c for c in range(clusters.k) if member_lists[c].size]
    if workers > 1 and len(populated) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_cluster, populated))
    else:
        for c in populated:
            run_cluster(c)

    # flatten duplicate chains to the final KEPT survivor
    def resolve(i: int) -> int:
        trail = []
        while status[i] == _DUPLICATE:
            trail.append(i)
            i = int(dup_row[i])
        for t in trail:
            dup_row[t] = i
        return i

    ids = manifest.ids()
    decisions = []
    for row in range(n):
        st = Status.KEPT if status[row] == _KEPT else (
            Status.OUTLIER if status[row] == _OUTLIER else Status.DUPLICATE
        )
        dup_id = None
        if st is Status.DUPLICATE:
            dup_id = ids[resolve(int(dup_row[row]))]
        decisions.append(
            PruneDecision(
                item_id=ids[row],
                status=st,
                cluster=int(clusters.assignments[row]),
                dist_to_centroid=float(dists[row]),
                duplicate_of=dup_id,
            )
        )
    retained = sum(1 for d in decisions if d.status is Status.KEPT)
    return PruneManifest(
        decisions=decisions,
        config=config,
        retained=retained,
        retention_ratio=retained / n,
        cluster_model_summary=clusters.summary(),
    )


@dataclass
class SweepResult:
    eta: float
    manifest: PruneManifest
    achieved_ratio: float
    steps: int
    converged: bool
    unreachable: bool = False
    floor_ratio: float | None = None
    warning: str | None = None


def sweep_eta(
    matrix: EmbeddingMatrix,
    manifest: ItemManifest,
    clusters: ClusterModel,
    epsilon: float,
    target_ratio: float,
    tolerance: float,
    *,
    max_iterations: int = 1,
    kmeans: KMeansConfig | None = None,
    workers: int = 1,
    max_steps: int = 40,
) -> SweepResult:
    """Bisect eta over [-1, 1] until retention lands within tolerance of
    target_ratio.

    Retention is non-decreasing in eta, so ordinary bisection applies.
    The endpoints are probed first: eta=1 gives the achievable ceiling
    (only the epsilon stage deletes), eta=-1 the floor (every cluster
    collapses). An unreachable target returns the nearest endpoint
    manifest with the unreachable flag set instead of raising.
    """
    if not 0.0 < target_ratio <= 1.0:
        raise DomainError(f"target_ratio must be in (0, 1], got {target_ratio}")
    if tolerance <= 0.0:
        raise DomainError("tolerance must be > 0")
    kcfg = kmeans if kmeans is not None else KMeansConfig(k=clusters.k, seed=clusters.seed)

    def run(eta: float) -> PruneManifest:
        cfg = PruneConfig(eta=eta, epsilon=epsilon, max_iterations=max_iterations, kmeans=kcfg)
        return prune(matrix, manifest, clusters, cfg, workers=workers)

    hi_manifest = run(1.0)
    if abs(hi_manifest.retention_ratio - target_ratio) <= tolerance:
        return SweepResult(1.0, hi_manifest, hi_manifest.retention_ratio, 0, True)
    if hi_manifest.retention_ratio < target_ratio - tolerance:
        return SweepResult(
            1.0, hi_manifest, hi_manifest.retention_ratio, 0,
            converged=False, unreachable=True,
            warning=(
                f"target {target_ratio} exceeds the achievable ceiling "
                f"{hi_manifest.retention_ratio:.6f} (epsilon stage removes too much)"
            ),
        )

    lo_manifest = run(-1.0)
    floor = lo_manifest.retention_ratio
    if abs(floor - target_ratio) <= tolerance:
        return SweepResult(-1.0, lo_manifest, floor, 0, True, floor_ratio=floor)
    if floor > target_ratio + tolerance:
        return SweepResult(
            -1.0, lo_manifest, floor, 0,
            converged=False, unreachable=True, floor_ratio=floor,
            warning=f"target {target_ratio} is below the achievable floor {floor:.6f}",
        )

    lo, hi = -1.0, 1.0
    best: tuple[float, float, PruneManifest] | None = None
    for step in range(1, max_steps + 1):
        mid = (lo + hi) / 2.0
        mid_manifest = run(mid)
        ratio = mid_manifest.retention_ratio
        if best is None or abs(ratio - target_ratio) < abs(best[1] - target_ratio):
            best = (mid, ratio, mid_manifest)
        if abs(ratio - target_ratio) <= tolerance:
            return SweepResult(mid, mid_manifest, ratio, step, True, floor_ratio=floor)
        if ratio < target_ratio:
            lo = mid
        else:
            hi = mid
    eta, ratio, best_manifest = best  # type: ignore[misc]
    return SweepResult(
        eta, best_manifest, ratio, max_steps, False, floor_ratio=floor,
        warning=(
            f"no eta within tolerance after {max_steps} bisection steps; "
            f"closest retention {ratio:.6f} at eta {eta:.9f}"
        ),
    )


def prune_random(
    matrix: EmbeddingMatrix,
    manifest: ItemManifest,
    ratio: float,
    seed: int,
) -> PruneManifest:
    """Baseline: keep a uniform sample of round(ratio * n) items."""
    if not 0.0 <= ratio <= 1.0:
        raise DomainError(f"ratio must be in [0, 1], got {ratio}")
    n = matrix.n
    manifest.validate(n)
    keep_count = round(ratio * n)
    rng = np.random.default_rng(seed)
    kept = np.zeros(n, dtype=bool)
    if keep_count:
        kept[rng.choice(n, size=keep_count, replace=False)] = True
    ids = manifest.ids()
    decisions = [
        PruneDecision(
            item_id=ids[row],
            status=Status.KEPT if kept[row] else Status.DUPLICATE,
            cluster=-1,
            dist_to_centroid=0.0,
            duplicate_of=None if kept[row] else RANDOM_SENTINEL,
        )
        for row in range(n)
    ]
    config = PruneConfig(eta=1.0, epsilon=2.0, kmeans=KMeansConfig(k=1, seed=seed))
    return PruneManifest(
        decisions=decisions,
        config=config,
        retained=keep_count,
        retention_ratio=keep_count / n if n else 1.0,
        cluster_model_summary={"k": 0, "objective": 0.0, "seed": seed},
        method="random",
    )
