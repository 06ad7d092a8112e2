"""Writers for the .emb embedding format and its JSON-lines manifest.

Layout (all integers little-endian):

    bytes 0-7    magic "DELEMB01"
    bytes 8-11   format version u32 (= 1)
    bytes 12-15  row count n u32
    bytes 16-19  dimension d u32
    bytes 20-23  flags u32 (bit 0: rows are L2-normalized)
    bytes 24-    n*d float32 values, row-major

Manifest: one {"id", "uri", "row"} JSON object per line, rows ascending.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DELEMB01"
FORMAT_VERSION = 1
FLAG_NORMALIZED = 0x1
_HEADER = struct.Struct("<8sIIII")


def write_emb(path: Path | str, values: np.ndarray, normalized: bool) -> None:
    values = np.ascontiguousarray(values, dtype="<f4")
    n, d = values.shape
    flags = FLAG_NORMALIZED if normalized else 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, n, d, flags))
        fh.write(values.tobytes())


def write_manifest(path: Path | str, ids: list[str], uris: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row, (item_id, uri) in enumerate(zip(ids, uris)):
            fh.write(json.dumps({"id": item_id, "uri": uri, "row": row}) + "\n")
