"""Embedding-space dataset pruning and data-effectiveness scoring."""

from .cluster import (
    AUTO,
    ClusterModel,
    KMeansConfig,
    distance_to_centroid,
    fit,
    resolve_auto_k,
)
from .errors import (
    ConfigError,
    ConsistencyError,
    DataError,
    DomainError,
    EmbpruneError,
    EmptyInputError,
    FitError,
    FormatError,
    NumericError,
    ValidationError,
)
from .metrics import (
    ComputeBudget,
    DelScore,
    SavingsReport,
    compute_budget,
    del_score,
    epochs_for_ratio,
    fit_alpha,
    gpu_hours,
    savings_report,
    storage_bytes,
)
from .prune import (
    PruneConfig,
    PruneDecision,
    PruneManifest,
    Status,
    SweepResult,
    cosine_similarity,
    prune,
    prune_random,
    save_manifest,
    sweep_eta,
    write_keep_list,
)
from .store import (
    EmbeddingMatrix,
    GroundTruth,
    ItemManifest,
    ManifestEntry,
    SynthSpec,
    load,
    normalize_rows,
    save,
    synthesize,
)

__version__ = "0.1.0"
