"""Shared construction helpers for the test suite."""

import numpy as np

from embprune import EmbeddingMatrix, ItemManifest, normalize_rows


def unit_matrix(rows) -> EmbeddingMatrix:
    vals = normalize_rows(np.asarray(rows, dtype=np.float32))
    return EmbeddingMatrix(vals, normalized=True)


def random_unit_matrix(rng: np.random.Generator, n: int, d: int) -> EmbeddingMatrix:
    return unit_matrix(rng.normal(size=(n, d)))


def manifest_for(n: int) -> ItemManifest:
    return ItemManifest.for_rows([f"it-{i:05d}" for i in range(n)])


def decisions_by_id(manifest):
    return {d.item_id: d for d in manifest.decisions}
