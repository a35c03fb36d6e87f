"""Prompt retrieval over the annotated subset.

Pools here are tiny (at most the annotation budget), so retrieval is an
exhaustive cosine scan; ties break by ascending id.
"""

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet, normalize


@dataclass
class RetrievalIndex:
    ids: list[str]
    vectors: np.ndarray  # unit rows, float64

    @property
    def size(self) -> int:
        return len(self.ids)


def build_index(e: EmbeddingSet, annotated_ids: list[str]) -> RetrievalIndex:
    """Restrict a pool to the annotated ids and normalize the rows."""
    if not annotated_ids:
        raise ValueError("annotated id list must be nonempty")
    rows = []
    for name in annotated_ids:
        try:
            rows.append(e.index_of(name))
        except KeyError:
            raise ValueError(f"unknown annotated id {name!r}") from None
    sub = EmbeddingSet(
        ids=list(annotated_ids), vectors=e.vectors[rows], normalized=False
    )
    unit = normalize(sub)
    return RetrievalIndex(ids=unit.ids, vectors=unit.vectors)


def retrieve_scored(idx: RetrievalIndex, query, c: int):
    """Top-min(c, |idx|) (id, cosine) pairs by descending similarity."""
    if c < 1:
        raise ValueError("c must be >= 1")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (idx.vectors.shape[1],):
        raise ValueError(
            f"query dimension {q.shape} does not match index "
            f"dimension {idx.vectors.shape[1]}"
        )
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise ValueError("cosine undefined for zero query vector")
    sims = idx.vectors @ (q / norm)
    sims = np.minimum(1.0, np.maximum(-1.0, sims))
    order = sorted(range(idx.size), key=lambda i: (-sims[i], idx.ids[i]))
    return [(idx.ids[i], float(sims[i])) for i in order[: min(c, idx.size)]]


def retrieve(idx: RetrievalIndex, query, c: int) -> list[str]:
    """The min(c, |idx|) most similar annotated ids, most similar first."""
    return [name for name, _ in retrieve_scored(idx, query, c)]


def random_retrieve(idx: RetrievalIndex, c: int, seed: int = 0) -> list[str]:
    """Uniform sample of min(c, |idx|) annotated ids, fixed by seed."""
    if c < 1:
        raise ValueError("c must be >= 1")
    rng = np.random.default_rng(seed)
    picks = rng.choice(idx.size, size=min(c, idx.size), replace=False)
    return [idx.ids[int(i)] for i in picks]
