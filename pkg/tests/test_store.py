import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from embprune import (
    ConfigError,
    DataError,
    EmbeddingMatrix,
    FormatError,
    ItemManifest,
    ManifestEntry,
    SynthSpec,
    ValidationError,
    load,
    normalize_rows,
    save,
    synthesize,
)
from embprune.store import MAGIC, default_manifest_path

from helpers import manifest_for, unit_matrix


def test_empty_matrix_roundtrip(tmp_path):
    matrix = EmbeddingMatrix(np.empty((0, 768), dtype=np.float32))
    path = tmp_path / "empty.emb"
    save(matrix, ItemManifest([]), path)
    assert path.stat().st_size == 24
    back, manifest = load(path)
    assert back.n == 0 and back.d == 768
    assert len(manifest) == 0


def test_two_row_file_is_48_bytes(tmp_path):
    matrix = EmbeddingMatrix(np.array([[1, 0, 0], [0, 1, 0]], dtype=np.float32))
    path = tmp_path / "two.emb"
    save(matrix, manifest_for(2), path)
    assert path.stat().st_size == 24 + 2 * 3 * 4


def test_synth_roundtrip_bit_exact(tmp_path):
    matrix, manifest, _ = synthesize(
        SynthSpec(clusters=3, points_per_cluster=7, outlier_count=2, dim=12, seed=5)
    )
    path = tmp_path / "s.emb"
    save(matrix, manifest, path)
    back, back_manifest = load(path)
    assert back.values.tobytes() == matrix.values.tobytes()
    assert back.normalized == matrix.normalized
    assert back_manifest == manifest


def test_wrong_magic_is_format_error(tmp_path):
    path = tmp_path / "bad.emb"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
    with pytest.raises(FormatError):
        load(path)


def test_wrong_version_is_format_error(tmp_path):
    path = tmp_path / "bad.emb"
    path.write_bytes(MAGIC + (99).to_bytes(4, "little") + b"\x00" * 12)
    with pytest.raises(FormatError):
        load(path)


def test_truncated_payload_is_format_error(tmp_path):
    matrix = EmbeddingMatrix(np.ones((2, 3), dtype=np.float32))
    path = tmp_path / "t.emb"
    save(matrix, manifest_for(2), path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(FormatError):
        load(path)


def test_load_normalizes_three_four_five(tmp_path):
    matrix = EmbeddingMatrix(np.array([[3.0, 4.0]], dtype=np.float32))
    path = tmp_path / "n.emb"
    save(matrix, manifest_for(1), path)
    back, _ = load(path, require_normalized=True)
    assert back.normalized
    assert back.values[0] == pytest.approx([0.6, 0.8], abs=1e-7)


def test_zero_norm_row_rejected_by_name(tmp_path):
    matrix = EmbeddingMatrix(np.array([[0.0, 0.0]], dtype=np.float32))
    path = tmp_path / "z.emb"
    save(matrix, manifest_for(1), path)
    with pytest.raises(DataError, match="zero-norm row 0"):
        load(path, require_normalized=True)


def test_nan_values_rejected():
    bad = np.array([[1.0, np.nan]], dtype=np.float32)
    with pytest.raises(DataError):
        EmbeddingMatrix(bad)


def test_normalized_flag_checked():
    with pytest.raises(DataError):
        EmbeddingMatrix(np.array([[3.0, 4.0]], dtype=np.float32), normalized=True)


def test_manifest_rejects_duplicate_ids():
    manifest = ItemManifest([
        ManifestEntry("a", "u0", 0),
        ManifestEntry("a", "u1", 1),
    ])
    with pytest.raises(ValidationError):
        manifest.validate(2)


def test_manifest_rejects_bad_row_order():
    manifest = ItemManifest([
        ManifestEntry("a", "u0", 1),
        ManifestEntry("b", "u1", 0),
    ])
    with pytest.raises(ValidationError):
        manifest.validate(2)


def test_save_rejects_inconsistent_n(tmp_path):
    matrix = EmbeddingMatrix(np.ones((3, 2), dtype=np.float32))
    with pytest.raises(ValidationError):
        save(matrix, manifest_for(2), tmp_path / "x.emb")


def test_default_manifest_path_sits_next_to_emb(tmp_path):
    assert default_manifest_path(tmp_path / "a.emb") == tmp_path / "a.items.jsonl"


finite32 = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False, width=32
)


@settings(max_examples=50, deadline=None)
@given(
    values=st.integers(min_value=0, max_value=6).flatmap(
        lambda n: st.integers(min_value=1, max_value=8).flatmap(
            lambda d: arrays(np.float32, (n, d), elements=finite32)
        )
    )
)
def test_roundtrip_property(tmp_path_factory, values):
    tmp = tmp_path_factory.mktemp("rt")
    matrix = EmbeddingMatrix(values)
    path = tmp / "p.emb"
    save(matrix, manifest_for(matrix.n), path)
    back, _ = load(path)
    assert back.values.tobytes() == matrix.values.tobytes()
    assert (back.n, back.d, back.normalized) == (matrix.n, matrix.d, matrix.normalized)


@settings(max_examples=50, deadline=None)
@given(
    values=st.integers(min_value=1, max_value=6).flatmap(
        lambda n: st.integers(min_value=1, max_value=8).flatmap(
            lambda d: arrays(
                np.float32, (n, d),
                elements=st.floats(min_value=0.0625, max_value=1024.0, width=32),
            )
        )
    )
)
def test_normalization_idempotent(values):
    once = normalize_rows(values)
    twice = normalize_rows(once)
    assert np.max(np.abs(twice.astype(np.float64) - once.astype(np.float64))) <= 1e-7


def test_synthesize_deterministic():
    spec = SynthSpec(clusters=3, points_per_cluster=9, duplicate_groups=2,
                     duplicate_size=2, noise_sigma=0.03, outlier_count=4, dim=10, seed=7)
    a = synthesize(spec)
    b = synthesize(spec)
    assert a[0].values.tobytes() == b[0].values.tobytes()
    assert a[1] == b[1]
    assert a[2].duplicate_groups == b[2].duplicate_groups


def test_synthesize_bookkeeping():
    matrix, manifest, truth = synthesize(
        SynthSpec(clusters=2, points_per_cluster=8, duplicate_groups=2,
                  duplicate_size=3, noise_sigma=0.02, outlier_count=1, dim=8, seed=3)
    )
    assert matrix.n == 2 * 8 + 1
    assert len(truth.duplicate_groups) == 2
    assert all(len(g) == 3 for g in truth.duplicate_groups)
    assert len(truth.outlier_ids) == 1
    assert truth.planted_cluster[-1] == -1
    manifest.validate(matrix.n)


def test_duplicates_are_tight_even_without_noise():
    matrix, manifest, truth = synthesize(
        SynthSpec(clusters=2, points_per_cluster=6, duplicate_groups=2,
                  duplicate_size=3, noise_sigma=0.0, outlier_count=0, dim=16, seed=11)
    )
    index = {e.item_id: e.row_index for e in manifest.entries}
    v = matrix.values.astype(np.float64)
    for group in truth.duplicate_groups:
        rows = [index[i] for i in group]
        for a in rows:
            for b in rows:
                if a < b:
                    assert float(v[a] @ v[b]) >= 0.999


def test_synthesize_rejects_small_dim():
    with pytest.raises(ConfigError):
        synthesize(SynthSpec(clusters=1, points_per_cluster=2, dim=1, seed=0))


def test_synthesize_rejects_oversized_groups():
    with pytest.raises(ConfigError):
        synthesize(SynthSpec(clusters=1, points_per_cluster=3,
                             duplicate_groups=2, duplicate_size=2, dim=4, seed=0))
