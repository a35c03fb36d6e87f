"""Embedding pool loading, validation, normalization, and persistence.

Three on-disk formats are supported:
  jsonl    one record per line: {"id": str, "vector": [floats]}
  csv      header ``id,v0,...,v{d-1}``
  raw-f32  16-byte header (magic ``IDEALEMB``, u32 LE n, u32 LE d) followed
           by n*d little-endian float32 values; ids implicit as "0".."n-1"

All vectors are held as float64 internally regardless of input encoding, so
downstream tie-breaking never depends on how the file was written.
"""

import csv
import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

RAW_MAGIC = b"IDEALEMB"

FORMATS = ("jsonl", "csv", "raw-f32")

_EXTENSIONS = {
    ".jsonl": "jsonl",
    ".csv": "csv",
    ".f32": "raw-f32",
    ".raw": "raw-f32",
    ".bin": "raw-f32",
}


@dataclass
class EmbeddingSet:
    """An id-indexed pool of fixed-dimension embedding vectors.

    Row order is canonical: it defines the vertex index order used by every
    downstream module, which keeps all tie-breaking reproducible.
    """

    ids: list[str]
    vectors: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array")
        if self.vectors.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if len(self.ids) != self.vectors.shape[0]:
            raise ValueError(
                f"{len(self.ids)} ids for {self.vectors.shape[0]} vectors"
            )
        if not np.all(np.isfinite(self.vectors)):
            row = int(np.argwhere(~np.isfinite(self.vectors).all(axis=1))[0][0])
            raise ValueError(f"non-finite value at row {row + 1}")
        seen = set()
        for i, name in enumerate(self.ids):
            if name in seen:
                raise ValueError(f"duplicate id {name!r} at row {i + 1}")
            seen.add(name)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index_of(self, name: str) -> int:
        try:
            return self._id_index[name]
        except AttributeError:
            self._id_index = {name: i for i, name in enumerate(self.ids)}
            return self._id_index[name]

    def content_hash(self) -> str:
        """SHA-256 over (n, d, ids, float64 row bytes); identifies the pool."""
        h = hashlib.sha256()
        h.update(b"EMB1")
        h.update(struct.pack("<QQ", self.n, self.dim))
        for name in self.ids:
            raw = name.encode("utf-8")
            h.update(struct.pack("<I", len(raw)))
            h.update(raw)
        h.update(np.ascontiguousarray(self.vectors, dtype="<f8").tobytes())
        return h.hexdigest()


def _infer_format(path: str) -> str:
    for ext, fmt in _EXTENSIONS.items():
        if path.endswith(ext):
            return fmt
    raise ValueError(f"cannot infer embedding format from {path!r}; pass format=")


def _reject_zero_rows(ids, vectors):
    norms = np.linalg.norm(vectors, axis=1)
    for i in np.flatnonzero(norms == 0.0):
        raise ValueError(f"all-zero vector at row {i + 1} (id {ids[i]!r})")


def load_embeddings(path: str, format: str = "auto") -> EmbeddingSet:
    """Load and validate an embedding file.

    Raises ValueError with the offending 1-based row number on dimension
    mismatch, non-finite values, duplicate ids, all-zero rows, or empty input.
    """
    fmt = _infer_format(path) if format == "auto" else format
    if fmt not in FORMATS:
        raise ValueError(f"unknown embedding format {fmt!r}")
    if fmt == "jsonl":
        ids, rows = _load_jsonl(path)
    elif fmt == "csv":
        ids, rows = _load_csv(path)
    else:
        ids, rows = _load_raw_f32(path)
    if not ids:
        raise ValueError(f"empty file: {path}")
    vectors = np.array(rows, dtype=np.float64)
    _reject_zero_rows(ids, vectors)
    return EmbeddingSet(ids=ids, vectors=vectors)


def _load_jsonl(path):
    ids, rows, dim = [], [], None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row_no = len(ids) + 1
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"bad json at row {row_no}: {exc}") from exc
            if not isinstance(rec, dict) or "id" not in rec or "vector" not in rec:
                raise ValueError(f"missing id/vector fields at row {row_no}")
            vec = rec["vector"]
            if dim is None:
                dim = len(vec)
                if dim < 1:
                    raise ValueError(f"empty vector at row {row_no}")
            elif len(vec) != dim:
                raise ValueError(
                    f"dimension mismatch at row {row_no}: expected {dim}, got {len(vec)}"
                )
            _check_finite_row(vec, row_no)
            ids.append(str(rec["id"]))
            rows.append([float(x) for x in vec])
    return ids, rows


def _load_csv(path):
    ids, rows, dim = [], [], None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return [], []
        if header[0] != "id" or any(
            col != f"v{i}" for i, col in enumerate(header[1:])
        ):
            raise ValueError(f"bad csv header {header!r}; expected id,v0,...")
        dim = len(header) - 1
        if dim < 1:
            raise ValueError("csv header declares no vector columns")
        for rec in reader:
            if not rec:
                continue
            row_no = len(ids) + 1
            if len(rec) - 1 != dim:
                raise ValueError(
                    f"dimension mismatch at row {row_no}: expected {dim}, got {len(rec) - 1}"
                )
            try:
                vec = [float(x) for x in rec[1:]]
            except ValueError as exc:
                raise ValueError(f"bad number at row {row_no}: {exc}") from exc
            _check_finite_row(vec, row_no)
            ids.append(rec[0])
            rows.append(vec)
    return ids, rows


def _load_raw_f32(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) == 0:
        raise ValueError(f"empty file: {path}")
    if len(blob) < 16 or blob[:8] != RAW_MAGIC:
        raise ValueError(f"not a raw-f32 embedding file (bad magic): {path}")
    n, d = struct.unpack("<II", blob[8:16])
    if n == 0:
        raise ValueError(f"empty file: {path}")
    if d == 0:
        raise ValueError("raw-f32 header declares dimension 0")
    expect = 16 + 4 * n * d
    if len(blob) != expect:
        raise ValueError(
            f"raw-f32 payload length {len(blob)} != expected {expect} for n={n} d={d}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=16).reshape(n, d)
    if not np.all(np.isfinite(data)):
        row = int(np.argwhere(~np.isfinite(data).all(axis=1))[0][0])
        raise ValueError(f"non-finite value at row {row + 1}")
    return [str(i) for i in range(n)], data.astype(np.float64)


def _check_finite_row(vec, row_no):
    arr = np.asarray(vec, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite value at row {row_no}")


def save_embeddings(e: EmbeddingSet, path: str, format: str = "auto") -> None:
    """Persist an EmbeddingSet; raw-f32 round-trips f32 data bit-exactly."""
    fmt = _infer_format(path) if format == "auto" else format
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for name, row in zip(e.ids, e.vectors):
                fh.write(
                    json.dumps({"id": name, "vector": [float(x) for x in row]})
                    + "\n"
                )
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id"] + [f"v{i}" for i in range(e.dim)])
            for name, row in zip(e.ids, e.vectors):
                writer.writerow([name] + [repr(float(x)) for x in row])
    elif fmt == "raw-f32":
        with open(path, "wb") as fh:
            fh.write(RAW_MAGIC)
            fh.write(struct.pack("<II", e.n, e.dim))
            fh.write(np.ascontiguousarray(e.vectors, dtype="<f4").tobytes())
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")


def normalize(e: EmbeddingSet) -> EmbeddingSet:
    """Scale every row to unit L2 norm. Idempotent; rejects all-zero rows."""
    if e.normalized:
        return e
    norms = np.linalg.norm(e.vectors, axis=1)
    for i in np.flatnonzero(norms == 0.0):
        raise ValueError(f"cannot normalize all-zero vector (id {e.ids[i]!r})")
    return EmbeddingSet(
        ids=list(e.ids), vectors=e.vectors / norms[:, None], normalized=True
    )


def cosine(u, v) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1] against rounding."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero vector")
    return min(1.0, max(-1.0, float(np.dot(a, b)) / (na * nb)))
