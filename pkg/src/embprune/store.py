"""On-disk embedding format, item manifests, and synthetic dataset generation.

The binary ".emb" layout is fixed and versioned:

    bytes 0-7    magic "DELEMB01"
    bytes 8-11   format version, u32 little-endian (currently 1)
    bytes 12-15  row count n, u32 little-endian
    bytes 16-19  dimension d, u32 little-endian
    bytes 20-23  flags, u32 little-endian (bit 0: rows are L2-normalized)
    bytes 24-    n*d IEEE-754 float32 values, little-endian, row-major

The sidecar item manifest is UTF-8 JSON lines, one object per row in
ascending row order: {"id": ..., "uri": ..., "row": ...}.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FormatError, ValidationError

MAGIC = b"DELEMB01"
FORMAT_VERSION = 1
FLAG_NORMALIZED = 0x1
_HEADER = struct.Struct("<8sIIII")

# Row norms may drift this far from 1.0 and still count as normalized.
NORM_TOLERANCE = 1e-5

# Perturbation applied to planted near-duplicates before renormalizing.
_DUPLICATE_SIGMA = 1e-4


@dataclass
class EmbeddingMatrix:
    """An n-by-d block of float32 feature vectors, one item per row."""

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise ValidationError(f"expected a 2-d array, got shape {values.shape}")
        if values.shape[1] < 1:
            raise ValidationError("embedding dimension must be >= 1")
        if not np.isfinite(values).all():
            raise DataError("embedding values contain NaN or infinity")
        if self.normalized and values.shape[0]:
            norms = np.linalg.norm(values.astype(np.float64), axis=1)
            bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)
            if bad.size:
                raise DataError(
                    f"row {bad[0]} is flagged normalized but has norm {norms[bad[0]]:.6g}"
                )
        self.values = values

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def d(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class ManifestEntry:
    item_id: str
    source_uri: str
    row_index: int


@dataclass
class ItemManifest:
    """Ordered id/uri records binding matrix rows back to source items."""

    entries: list[ManifestEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> list[str]:
        return [e.item_id for e in self.entries]

    def validate(self, n: int) -> None:
        """Check the row-index and id invariants against a matrix of n rows."""
        if len(self.entries) != n:
            raise ValidationError(
                f"manifest has {len(self.entries)} entries for a matrix of {n} rows"
            )
        seen_ids = set()
        for i, entry in enumerate(self.entries):
            if entry.row_index != i:
                raise ValidationError(
                    f"manifest entry {i} has row_index {entry.row_index}; rows must be 0..n-1 ascending"
                )
            if entry.item_id in seen_ids:
                raise ValidationError(f"duplicate item_id {entry.item_id!r}")
            seen_ids.add(entry.item_id)

    @classmethod
    def for_rows(cls, ids: list[str], uris: list[str] | None = None) -> "ItemManifest":
        if uris is None:
            uris = [f"row://{i}" for i in range(len(ids))]
        return cls([ManifestEntry(i, u, r) for r, (i, u) in enumerate(zip(ids, uris))])


def default_manifest_path(path: Path | str) -> Path:
    return Path(path).with_suffix(".items.jsonl")


def normalize_rows(values: np.ndarray) -> np.ndarray:
    """L2-normalize every row out of place; all-zero rows are an error."""
    v64 = np.asarray(values, dtype=np.float64)
    norms = np.linalg.norm(v64, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DataError(f"zero-norm row {zero[0]} cannot be normalized")
    return (v64 / norms[:, None]).astype(np.float32)


def write_values(path: Path | str, values: np.ndarray, normalized: bool) -> None:
    """Write a bare .emb file (header + float32 payload) without a manifest."""
    values = np.ascontiguousarray(values, dtype="<f4")
    n, d = values.shape
    flags = FLAG_NORMALIZED if normalized else 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, n, d, flags))
        fh.write(values.tobytes())


def save(
    matrix: EmbeddingMatrix,
    manifest: ItemManifest,
    path: Path | str,
    manifest_path: Path | str | None = None,
) -> None:
    """Write matrix and manifest to disk; read-back round-trips bit-exactly."""
    manifest.validate(matrix.n)
    write_values(path, matrix.values, matrix.normalized)
    mpath = Path(manifest_path) if manifest_path is not None else default_manifest_path(path)
    with open(mpath, "w", encoding="utf-8") as fh:
        for e in manifest.entries:
            fh.write(
                json.dumps({"id": e.item_id, "uri": e.source_uri, "row": e.row_index}) + "\n"
            )


def _read_values(path: Path | str) -> tuple[np.ndarray, bool]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, n, d, flags = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if d < 1:
        raise FormatError(f"{path}: dimension must be >= 1, header says {d}")
    expected = _HEADER.size + 4 * n * d
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, d).copy()
    return values, bool(flags & FLAG_NORMALIZED)


def load_manifest(path: Path | str, n: int) -> ItemManifest:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                entries.append(ManifestEntry(str(obj["id"]), str(obj["uri"]), int(obj["row"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{lineno + 1}: bad manifest line: {exc}") from exc
    manifest = ItemManifest(entries)
    manifest.validate(n)
    return manifest


def load(
    path: Path | str,
    require_normalized: bool = False,
    manifest_path: Path | str | None = None,
) -> tuple[EmbeddingMatrix, ItemManifest]:
    """Load and validate an .emb file plus its item manifest.

    With require_normalized the returned rows are L2-normalized out of
    place regardless of the stored flag; an all-zero row is a DataError
    naming the row index.
    """
    values, normalized = _read_values(path)
    if not np.isfinite(values).all():
        raise DataError(f"{path}: embedding values contain NaN or infinity")
    if require_normalized:
        values = normalize_rows(values)
        normalized = True
    matrix = EmbeddingMatrix(values, normalized)
    matrix.values.setflags(write=False)
    mpath = Path(manifest_path) if manifest_path is not None else default_manifest_path(path)
    manifest = load_manifest(mpath, matrix.n)
    return matrix, manifest


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic dataset with known structure.

    Total size is clusters * points_per_cluster + outlier_count;
    near-duplicate groups overwrite existing cluster members rather than
    adding rows.
    """

    clusters: int
    points_per_cluster: int
    duplicate_groups: int = 0
    duplicate_size: int = 0
    noise_sigma: float = 0.05
    outlier_count: int = 0
    dim: int = 768
    seed: int = 0


@dataclass
class GroundTruth:
    """What synthesize planted, for use by property tests."""

    duplicate_groups: list[list[str]]
    outlier_ids: list[str]
    planted_cluster: list[int]  # per row; -1 marks outliers


def _validate_spec(spec: SynthSpec) -> None:
    if spec.dim < 2:
        raise ConfigError(f"dim must be >= 2, got {spec.dim}")
    for name in ("clusters", "points_per_cluster", "duplicate_groups", "duplicate_size", "outlier_count"):
        if getattr(spec, name) < 0:
            raise ConfigError(f"{name} must be >= 0")
    if spec.noise_sigma < 0:
        raise ConfigError("noise_sigma must be >= 0")
    if spec.duplicate_groups > 0:
        if spec.duplicate_size < 2:
            raise ConfigError("duplicate_size must be >= 2 when duplicate groups are planted")
        if spec.clusters < 1:
            raise ConfigError("duplicate groups need at least one cluster")
        per_cluster = [0] * spec.clusters
        for g in range(spec.duplicate_groups):
            per_cluster[g % spec.clusters] += spec.duplicate_size
        if max(per_cluster) > spec.points_per_cluster:
            raise ConfigError(
                "duplicate groups do not fit: a cluster would need "
                f"{max(per_cluster)} slots but has {spec.points_per_cluster}"
            )


def _unit(v: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / norms


def synthesize(spec: SynthSpec) -> tuple[EmbeddingMatrix, ItemManifest, GroundTruth]:
    """Generate a deterministic dataset: spherical clusters, planted
    near-duplicate groups, and uniform-sphere outliers."""
    _validate_spec(spec)
    rng = np.random.default_rng(spec.seed)
    ppc = spec.points_per_cluster
    n_members = spec.clusters * ppc
    total = n_members + spec.outlier_count
    rows = np.zeros((total, spec.dim), dtype=np.float64)

    if spec.clusters:
        centers = _unit(rng.normal(size=(spec.clusters, spec.dim)))
        for c in range(spec.clusters):
            block = np.tile(centers[c], (ppc, 1))
            if spec.noise_sigma > 0 and ppc:
                block = block + rng.normal(0.0, spec.noise_sigma, size=(ppc, spec.dim))
            if ppc:
                rows[c * ppc : (c + 1) * ppc] = _unit(block)

    ids = [f"item-{i:06d}" for i in range(total)]
    uris = []
    planted = []
    for c in range(spec.clusters):
        for i in range(ppc):
            uris.append(f"synth://cluster/{c}/point/{i}")
            planted.append(c)

    groups: list[list[str]] = []
    next_free = [0] * max(spec.clusters, 1)
    for g in range(spec.duplicate_groups):
        c = g % spec.clusters
        start = next_free[c]
        next_free[c] = start + spec.duplicate_size
        base = c * ppc + start
        source = rows[base]
        for off in range(1, spec.duplicate_size):
            noise = rng.normal(0.0, _DUPLICATE_SIGMA, size=spec.dim)
            rows[base + off] = _unit(source + noise)
        groups.append([ids[base + off] for off in range(spec.duplicate_size)])

    if spec.outlier_count:
        rows[n_members:] = _unit(rng.normal(size=(spec.outlier_count, spec.dim)))
    for j in range(spec.outlier_count):
        uris.append(f"synth://outlier/{j}")
        planted.append(-1)

    matrix = EmbeddingMatrix(rows.astype(np.float32), normalized=True)
    matrix.values.setflags(write=False)
    manifest = ItemManifest.for_rows(ids, uris)
    truth = GroundTruth(
        duplicate_groups=groups,
        outlier_ids=ids[n_members:],
        planted_cluster=planted,
    )
    return matrix, manifest, truth
