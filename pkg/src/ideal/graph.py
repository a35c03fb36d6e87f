"""Directed k-NN similarity graph with cosine-derived activation probabilities.

Each vertex points at its k nearest successors by cosine similarity.  Edge
weights are the successor cosines, clamped at zero and normalized to sum to
one per source vertex; they act as activation probabilities in the diffusion
model.  Construction is exact (full pairwise scan) and fully deterministic:
all ties break by ascending vertex index.

Serialized form:
  header line  ``IDEALGRAPH v1 n=<n> k=<k> hash=<hex>``
  edge lines   ``src<TAB>dst<TAB>p`` (17 significant digits), ordered by
               (src asc, probability desc, dst asc)
"""

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet, normalize

_SCAN_BLOCK = 512  # rows of the similarity matrix computed per pass


@dataclass(eq=False)
class DiffusionGraph:
    """G = (V, E, P) in flat CSR-like arrays.

    ``targets[offsets[v]:offsets[v+1]]`` are v's successors, sorted by
    descending probability then ascending target index, with the matching
    probabilities in ``probs``.  ``built_from`` is the content hash of the
    source EmbeddingSet ("" when hand-built).
    """

    n: int
    k: int
    offsets: np.ndarray  # int64, n + 1
    targets: np.ndarray  # int32, E
    probs: np.ndarray  # float64, E
    built_from: str = ""

    @property
    def num_edges(self) -> int:
        return int(self.targets.shape[0])

    def successors(self, v: int):
        """List of (target, probability) for vertex v, in stored order."""
        lo, hi = int(self.offsets[v]), int(self.offsets[v + 1])
        return [
            (int(self.targets[j]), float(self.probs[j])) for j in range(lo, hi)
        ]

    def out_degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    @property
    def edge_sources(self) -> np.ndarray:
        """Per-edge source vertex, aligned with ``targets``/``probs``."""
        try:
            return self._edge_src
        except AttributeError:
            self._edge_src = np.repeat(
                np.arange(self.n, dtype=np.int32), np.diff(self.offsets)
            )
            return self._edge_src

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("graph must have at least one vertex")
        if self.offsets.shape[0] != self.n + 1:
            raise ValueError("offsets length must be n + 1")
        src = self.edge_sources
        if self.num_edges and np.any(src == self.targets):
            raise ValueError("self-edge present")
        if self.num_edges and (
            np.any(self.probs < 0.0) or np.any(self.probs > 1.0)
        ):
            raise ValueError("edge probability outside [0, 1]")
        for v in range(self.n):
            lo, hi = int(self.offsets[v]), int(self.offsets[v + 1])
            degree = hi - lo
            if degree > self.k:
                raise ValueError(f"vertex {v} exceeds successor bound k={self.k}")
            pairs = list(zip(-self.probs[lo:hi], self.targets[lo:hi]))
            if pairs != sorted(pairs):
                raise ValueError(f"successors of vertex {v} not sorted")
            if len(set(self.targets[lo:hi].tolist())) != degree:
                raise ValueError(f"duplicate successor at vertex {v}")

    @classmethod
    def from_edges(cls, n: int, edges, k: int | None = None) -> "DiffusionGraph":
        """Build a graph from (src, dst, p) triples; test/replay constructor."""
        per_vertex = [[] for _ in range(n)]
        for src, dst, p in edges:
            if src == dst:
                raise ValueError("self-edge present")
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError(f"edge ({src}, {dst}) out of range")
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"probability {p} outside [0, 1]")
            per_vertex[src].append((dst, float(p)))
        offsets = [0]
        targets, probs = [], []
        for v in range(n):
            per_vertex[v].sort(key=lambda e: (-e[1], e[0]))
            if len({d for d, _ in per_vertex[v]}) != len(per_vertex[v]):
                raise ValueError(f"duplicate successor at vertex {v}")
            for dst, p in per_vertex[v]:
                targets.append(dst)
                probs.append(p)
            offsets.append(len(targets))
        if k is None:
            k = max((len(s) for s in per_vertex), default=0) or 1
        return cls(
            n=n,
            k=k,
            offsets=np.asarray(offsets, dtype=np.int64),
            targets=np.asarray(targets, dtype=np.int32),
            probs=np.asarray(probs, dtype=np.float64),
        )


def knn_successors(e: EmbeddingSet, v: int, k: int) -> list[int]:
    """The min(k, n-1) indices u != v with largest cosine(v, u).

    Returned in descending cosine order; ties break by ascending index.
    """
    if not 0 <= v < e.n:
        raise ValueError(f"vertex {v} out of range for n={e.n}")
    if k < 1:
        raise ValueError("k must be >= 1")
    unit = normalize(e).vectors
    sims = unit @ unit[v]
    sims[v] = -np.inf
    order = np.argsort(-sims, kind="stable")  # stable: equal sims keep asc index
    return order[: min(k, e.n - 1)].tolist()


def build_graph(e: EmbeddingSet, k: int = 10) -> DiffusionGraph:
    """Connect every vertex to its k nearest successors with normalized weights.

    Negative successor cosines are clamped to 0 before normalization; when
    every clamped similarity is 0 the vertex keeps its edges with p = 0.
    """
    if e.n < 2:
        raise ValueError("graph construction needs at least 2 vertices")
    if k < 1:
        raise ValueError("k must be >= 1")
    unit = normalize(e).vectors
    degree = min(k, e.n - 1)
    targets = np.empty((e.n, degree), dtype=np.int32)
    probs = np.empty((e.n, degree), dtype=np.float64)
    for lo in range(0, e.n, _SCAN_BLOCK):
        hi = min(lo + _SCAN_BLOCK, e.n)
        sims = unit[lo:hi] @ unit.T
        sims[np.arange(hi - lo), np.arange(lo, hi)] = -np.inf
        order = np.argsort(-sims, kind="stable", axis=1)[:, :degree]
        top = np.take_along_axis(sims, order, axis=1)
        clamped = np.maximum(top, 0.0)
        mass = clamped.sum(axis=1)
        weights = np.divide(
            clamped,
            mass[:, None],
            out=np.zeros_like(clamped),
            where=mass[:, None] > 0,
        )
        # re-sort per vertex: clamping can reorder ties among zero weights
        resort = np.lexsort((order, -weights), axis=1)
        targets[lo:hi] = np.take_along_axis(order, resort, axis=1)
        probs[lo:hi] = np.take_along_axis(weights, resort, axis=1)
    offsets = np.arange(e.n + 1, dtype=np.int64) * degree
    return DiffusionGraph(
        n=e.n,
        k=k,
        offsets=offsets,
        targets=targets.reshape(-1),
        probs=probs.reshape(-1),
        built_from=e.content_hash(),
    )


def save_graph(g: DiffusionGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"IDEALGRAPH v1 n={g.n} k={g.k} hash={g.built_from or 'none'}\n"
        )
        src = g.edge_sources
        for j in range(g.num_edges):
            fh.write(
                f"{int(src[j])}\t{int(g.targets[j])}\t{format(float(g.probs[j]), '.17g')}\n"
            )


def load_graph(path: str) -> DiffusionGraph:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        parts = header.split()
        if len(parts) != 5 or parts[0] != "IDEALGRAPH" or parts[1] != "v1":
            raise ValueError(f"not an IDEALGRAPH v1 file: {path}")
        fields = dict(p.split("=", 1) for p in parts[2:])
        n, k = int(fields["n"]), int(fields["k"])
        built_from = "" if fields["hash"] == "none" else fields["hash"]
        edges = []
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            src_s, dst_s, p_s = line.split("\t")
            edges.append((int(src_s), int(dst_s), float(p_s)))
    g = DiffusionGraph.from_edges(n, edges, k=k)
    g.built_from = built_from
    g.validate()
    return g
