"""Batch extraction: image directory in, .emb + manifest + report out."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from .encoder import Encoder, load_encoder
from .errors import NoImagesError
from .writer import write_emb, write_manifest

DEFAULT_PATTERNS = ("*.png", "*.jpg", "*.jpeg", "*.bmp", "*.webp")


@dataclass(frozen=True)
class ExtractSpec:
    input_dir: Path
    out_path: Path
    patterns: tuple[str, ...] = DEFAULT_PATTERNS
    model: str = "vit_b_16"
    pool: str = "mean"
    pretrained: bool = True
    init_seed: int = 0
    image_size: int = 224
    batch_size: int = 8
    device: str = "cpu"
    manifest_path: Path | None = None
    report_path: Path | None = None


@dataclass
class ExtractResult:
    written: int
    dim: int
    out_path: Path
    manifest_path: Path
    report_path: Path
    skipped: list[dict] = field(default_factory=list)


def _gather(input_dir: Path, patterns: tuple[str, ...]) -> list[Path]:
    found: set[Path] = set()
    for pattern in patterns:
        found.update(input_dir.rglob(pattern))
    return sorted(p for p in found if p.is_file())


def _decode(paths: list[Path], encoder: Encoder):
    tensors, kept, skipped = [], [], []
    for path in paths:
        try:
            with Image.open(path) as img:
                tensors.append(encoder.preprocess(img))
            kept.append(path)
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            skipped.append({"path": str(path), "reason": str(exc)})
    return tensors, kept, skipped


def extract(spec: ExtractSpec) -> ExtractResult:
    """Embed every decodable image under spec.input_dir, in lexicographic
    path order, and write the normalized .emb file plus manifest.

    Undecodable files are skipped and listed in the report; zero decodable
    images is an error.
    """
    encoder = load_encoder(
        spec.model, pool=spec.pool, pretrained=spec.pretrained,
        init_seed=spec.init_seed, image_size=spec.image_size, device=spec.device,
    )
    paths = _gather(Path(spec.input_dir), spec.patterns)
    tensors, kept, skipped = _decode(paths, encoder)
    if not kept:
        raise NoImagesError(f"no decodable images under {spec.input_dir}")

    chunks = []
    for start in range(0, len(tensors), spec.batch_size):
        batch = torch.stack(tensors[start : start + spec.batch_size])
        chunks.append(encoder.embed(batch))
    raw = np.vstack(chunks)
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    values = (raw / norms).astype(np.float32)

    out_path = Path(spec.out_path)
    manifest_path = Path(spec.manifest_path) if spec.manifest_path else out_path.with_suffix(".items.jsonl")
    report_path = Path(spec.report_path) if spec.report_path else out_path.with_suffix(".extract_report.json")

    input_dir = Path(spec.input_dir)
    ids = [str(p.relative_to(input_dir)) for p in kept]
    uris = [p.resolve().as_uri() for p in kept]
    write_emb(out_path, values, normalized=True)
    write_manifest(manifest_path, ids, uris)
    report = {
        "model": spec.model,
        "pool": spec.pool,
        "pretrained": spec.pretrained,
        "init_seed": spec.init_seed,
        "image_size": spec.image_size,
        "dim": encoder.dim,
        "processed": len(kept),
        "skipped_count": len(skipped),
        "skipped": skipped,
    }
    report_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return ExtractResult(
        written=len(kept),
        dim=encoder.dim,
        out_path=out_path,
        manifest_path=manifest_path,
        report_path=report_path,
        skipped=skipped,
    )
