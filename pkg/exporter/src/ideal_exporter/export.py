"""Encode a corpus and write it in the toolkit's embedding file formats.

Output is intentionally unnormalized: the consuming side owns normalization,
so there is exactly one scaling site in the pipeline.  Batch size changes
throughput only; values are identical up to encoder floating tolerance.

Formats (matching the consumer's loader):
  jsonl    {"id": ..., "vector": [...]} per line
  raw-f32  header ``IDEALEMB`` + u32 LE n + u32 LE d, then n*d LE float32;
           ids become implicit row numbers, so jsonl is preferred when ids
           must survive the trip
"""

import json
import struct

import numpy as np

from .corpus import read_corpus
from .encoders import get_encoder

RAW_MAGIC = b"IDEALEMB"

FORMATS = ("jsonl", "raw-f32")


def encode_corpus(
    input_path: str,
    model: str,
    batch_size: int,
    out_path: str,
    format: str = "jsonl",
) -> int:
    """Encode every record and write the embedding file; returns n."""
    if batch_size < 1:
        raise ValueError("batch size must be >= 1")
    if format not in FORMATS:
        raise ValueError(f"unknown output format {format!r}; expected {FORMATS}")
    records = read_corpus(input_path)
    encoder = get_encoder(model)
    rows = []
    for start in range(0, len(records), batch_size):
        batch = records[start : start + batch_size]
        try:
            encoded = encoder.encode_batch([r.text for r in batch])
        except Exception as exc:
            raise RuntimeError(
                f"encoding failed at record id {batch[0].id!r}: {exc}"
            ) from exc
        if encoded.shape != (len(batch), encoder.dim):
            raise RuntimeError(
                f"encoder returned shape {encoded.shape} at record id "
                f"{batch[0].id!r}; expected ({len(batch)}, {encoder.dim})"
            )
        rows.append(np.asarray(encoded, dtype=np.float64))
    vectors = np.concatenate(rows, axis=0)
    if format == "jsonl":
        _write_jsonl(out_path, records, vectors)
    else:
        _write_raw_f32(out_path, vectors)
    return len(records)


def _write_jsonl(path, records, vectors):
    with open(path, "w", encoding="utf-8") as fh:
        for rec, row in zip(records, vectors):
            fh.write(
                json.dumps({"id": rec.id, "vector": [float(x) for x in row]})
                + "\n"
            )


def _write_raw_f32(path, vectors):
    n, d = vectors.shape
    with open(path, "wb") as fh:
        fh.write(RAW_MAGIC)
        fh.write(struct.pack("<II", n, d))
        fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes())
