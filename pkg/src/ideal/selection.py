"""Subset selectors: greedy influence maximization (naive and lazy), the
brute-force optimum, and the comparison baselines.

Greedy candidate evaluation runs in one of three modes:
  fresh  each (step, candidate) subset gets its own coin stream keyed by the
         subset content (default; matches a literal reading of the greedy
         algorithm with a stochastic objective)
  crn    common random numbers: a fixed set of live-edge worlds is sampled
         once per run and every candidate is scored on the same worlds; the
         resulting objective is submodular, so lazy and naive selections
         coincide exactly
  exact  the live-edge enumeration oracle (small graphs only)

All argmax ties break by ascending vertex index.
"""

import heapq
import math
import time
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

import numpy as np

from .diffusion import (
    DEFAULT_REPS,
    ExactOracle,
    estimate_influence,
    stream_key,
)
from .embeddings import EmbeddingSet, normalize
from .graph import DiffusionGraph, knn_successors

METHODS = (
    "ideal",
    "ideal-lazy",
    "random",
    "kmeans",
    "mfl",
    "fast-votek",
    "brute-force",
)

BRUTE_FORCE_LIMIT = 10 ** 6

EVAL_MODES = ("fresh", "crn", "exact")


@dataclass
class SelectionResult:
    method: str
    budget: int
    selected: list[int]
    marginal_gains: list[float] = field(default_factory=list)
    seed: int | None = None
    wall_time: float = 0.0
    evaluations: int = 0


def _check_budget(m: int, n: int) -> None:
    if m < 1:
        raise ValueError("budget must be >= 1")
    if m > n:
        raise ValueError(f"budget {m} exceeds pool size {n}")


class _FreshEvaluator:
    """f(S + {v}) via a per-subset Monte-Carlo estimate."""

    def __init__(self, g, reps, seed):
        self.g, self.reps, self.seed = g, reps, seed
        self.members: list[int] = []

    def evaluate(self, v) -> float:
        return estimate_influence(
            self.g, self.members + [v], self.reps, self.seed
        ).mean

    def commit(self, v) -> None:
        self.members.append(v)

    def to_value(self, score) -> float:
        return float(score)


class _CommonWorldsEvaluator:
    """f(S + {v}) summed over fixed live-edge worlds (reach bitmasks).

    Scores are exact integer totals so that gain comparisons and the lazy
    heap's stale-bound invariant never depend on float rounding; ``to_value``
    converts a total back to the mean influence.
    """

    def __init__(self, g, reps, seed):
        self.reps = reps
        key = stream_key(b"worlds", seed)
        coins = np.random.Generator(np.random.Philox(key=key)).random(
            (reps, g.num_edges)
        )
        live = (coins <= g.probs) & (g.probs > 0.0)
        src = g.edge_sources
        self.reach = [
            _reach_masks(g.n, src, g.targets, live[r]) for r in range(reps)
        ]
        self.base = [0] * reps

    def evaluate(self, v) -> int:
        total = 0
        for base, reach in zip(self.base, self.reach):
            total += (base | reach[v]).bit_count()
        return total

    def commit(self, v) -> None:
        for r in range(self.reps):
            self.base[r] |= self.reach[r][v]

    def to_value(self, score) -> float:
        return score / self.reps


class _ExactEvaluator:
    def __init__(self, g):
        self.oracle = ExactOracle(g)
        self.members: list[int] = []

    def evaluate(self, v) -> float:
        return self.oracle.influence(self.members + [v])

    def commit(self, v) -> None:
        self.members.append(v)

    def to_value(self, score) -> float:
        return float(score)


def _reach_masks(n, src, dst, live) -> list[int]:
    """Per-vertex reachable-set bitmasks over one world's live edges."""
    adj = [1 << v for v in range(n)]
    for j in np.flatnonzero(live):
        adj[int(src[j])] |= 1 << int(dst[j])
    reach = list(adj)
    changed = True
    while changed:
        changed = False
        for v in range(n):
            acc = reach[v]
            rem = acc
            while rem:
                low = rem & -rem
                acc |= reach[low.bit_length() - 1]
                rem ^= low
            if acc != reach[v]:
                reach[v] = acc
                changed = True
    return reach


def _make_evaluator(g, reps, seed, mode):
    if mode == "fresh":
        return _FreshEvaluator(g, reps, seed)
    if mode == "crn":
        return _CommonWorldsEvaluator(g, reps, seed)
    if mode == "exact":
        return _ExactEvaluator(g)
    raise ValueError(f"unknown evaluation mode {mode!r}; expected {EVAL_MODES}")


def greedy_select(
    g: DiffusionGraph,
    m: int,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    lazy: bool = False,
    mode: str = "fresh",
    threads: int = 1,
) -> SelectionResult:
    """Pick m vertices by repeated maximum marginal influence gain.

    The naive loop re-scores every remaining candidate each step.  The lazy
    variant keeps stale gains in a max-heap and only refreshes the top entry,
    exploiting diminishing returns; under mode="crn" it selects the identical
    sequence while doing no more evaluations.
    """
    started = time.perf_counter()
    _check_budget(m, g.n)
    evaluator = _make_evaluator(g, reps, seed, mode)
    g.edge_sources  # warm the shared cache before any worker threads start
    selected: list[int] = []
    gains: list[float] = []
    evaluations = 0
    current = 0  # evaluator score of the committed S (int under mode="crn")

    if lazy:
        # heap entries: (-gain, vertex, step stamp); stamp == t means the
        # gain was computed against the current S and the entry is selectable
        heap = []
        for v in range(g.n):
            heap.append((-evaluator.evaluate(v), v, 0))
            evaluations += 1
        heapq.heapify(heap)
        for t in range(m):
            while True:
                neg_gain, v, stamp = heapq.heappop(heap)
                if stamp == t:
                    break
                score = evaluator.evaluate(v)
                evaluations += 1
                heapq.heappush(heap, (-(score - current), v, t))
            selected.append(v)
            new_score = current - neg_gain
            gains.append(evaluator.to_value(new_score) - evaluator.to_value(current))
            current = new_score
            evaluator.commit(v)
    else:
        remaining = list(range(g.n))
        pool = ThreadPoolExecutor(threads) if threads > 1 else None
        try:
            for _ in range(m):
                if pool is not None:
                    scores = list(pool.map(evaluator.evaluate, remaining))
                else:
                    scores = [evaluator.evaluate(v) for v in remaining]
                evaluations += len(remaining)
                best_i = 0
                for i in range(1, len(scores)):
                    if scores[i] > scores[best_i]:
                        best_i = i
                best_v = remaining.pop(best_i)
                selected.append(best_v)
                gains.append(
                    evaluator.to_value(scores[best_i]) - evaluator.to_value(current)
                )
                current = scores[best_i]
                evaluator.commit(best_v)
        finally:
            if pool is not None:
                pool.shutdown()

    return SelectionResult(
        method="ideal-lazy" if lazy else "ideal",
        budget=m,
        selected=selected,
        marginal_gains=gains,
        seed=seed,
        wall_time=time.perf_counter() - started,
        evaluations=evaluations,
    )


def brute_force_optimal(g: DiffusionGraph, m: int) -> SelectionResult:
    """Exhaustive argmax of exact influence over all size-m subsets.

    Ties resolve to the lexicographically smallest subset.  Guarded by
    C(n, m) <= 10^6 and the exact-oracle admissibility bound.
    """
    started = time.perf_counter()
    _check_budget(m, g.n)
    if math.comb(g.n, m) > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"C({g.n}, {m}) exceeds the brute-force bound {BRUTE_FORCE_LIMIT}"
        )
    oracle = ExactOracle(g)
    best, best_value = None, -math.inf
    evaluations = 0
    for subset in combinations(range(g.n), m):
        value = oracle.influence(subset)
        evaluations += 1
        if value > best_value:
            best, best_value = subset, value
    return SelectionResult(
        method="brute-force",
        budget=m,
        selected=list(best),
        marginal_gains=[],
        seed=None,
        wall_time=time.perf_counter() - started,
        evaluations=evaluations,
    )


def random_select(n: int, m: int, seed: int = 0) -> SelectionResult:
    """Uniform sample of m vertices without replacement, fixed by seed."""
    started = time.perf_counter()
    _check_budget(m, n)
    rng = np.random.default_rng(seed)
    picks = rng.choice(n, size=m, replace=False)
    return SelectionResult(
        method="random",
        budget=m,
        selected=[int(v) for v in picks],
        seed=seed,
        wall_time=time.perf_counter() - started,
    )


def kmeans_select(e: EmbeddingSet, m: int, seed: int = 0) -> SelectionResult:
    """Lloyd's algorithm with farthest-point seeding; returns, per cluster,
    the example nearest its centroid.

    The run seed picks the first center; the other m-1 seeds maximize the
    Euclidean distance to the nearest chosen center.  Capped at 100 rounds
    or a centroid shift below 1e-6.  An empty cluster is re-seeded from the
    point farthest from its assigned center.  Ties break by lowest index.
    """
    started = time.perf_counter()
    _check_budget(m, e.n)
    points = e.vectors
    rng = np.random.default_rng(seed)

    first = int(rng.integers(e.n))
    centers = [points[first].copy()]
    nearest = ((points - points[first]) ** 2).sum(axis=1)
    nearest[first] = -np.inf
    for _ in range(1, m):
        nxt = int(np.argmax(nearest))
        centers.append(points[nxt].copy())
        nearest = np.minimum(nearest, ((points - points[nxt]) ** 2).sum(axis=1))
        nearest[nxt] = -np.inf
    centroids = np.stack(centers)

    labels = None
    for _ in range(100):
        d2 = _sq_distances(points, centroids)
        labels = d2.argmin(axis=1)
        labels = _reseed_empty(d2, labels, m)
        new_centroids = np.stack(
            [points[labels == j].mean(axis=0) for j in range(m)]
        )
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < 1e-6:
            break
    d2 = _sq_distances(points, centroids)
    labels = _reseed_empty(d2, d2.argmin(axis=1), m)

    selected = []
    for j in range(m):
        members = np.flatnonzero(labels == j)
        selected.append(int(members[np.argmin(d2[members, j])]))
    return SelectionResult(
        method="kmeans",
        budget=m,
        selected=selected,
        seed=seed,
        wall_time=time.perf_counter() - started,
    )


def _sq_distances(points, centroids):
    d2 = (
        (points ** 2).sum(axis=1)[:, None]
        - 2.0 * (points @ centroids.T)
        + (centroids ** 2).sum(axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def _reseed_empty(d2, labels, m):
    labels = labels.copy()
    n = d2.shape[0]
    for j in range(m):
        if not np.any(labels == j):
            # farthest point from its own center, never a cluster's last member
            sizes = np.bincount(labels, minlength=m)
            residual = d2[np.arange(n), labels].copy()
            residual[sizes[labels] <= 1] = -np.inf
            labels[int(np.argmax(residual))] = j
    return labels


def mfl_select(e: EmbeddingSet, m: int) -> SelectionResult:
    """Greedy maximization of total cosine similarity to the nearest pick
    (the facility-location representativeness objective)."""
    started = time.perf_counter()
    _check_budget(m, e.n)
    unit = normalize(e).vectors
    sims = unit @ unit.T
    first_gains = sims.sum(axis=0)
    pick = int(np.argmax(first_gains))
    selected = [pick]
    gains = [float(first_gains[pick])]
    cover = sims[:, pick].copy()
    for _ in range(1, m):
        margins = np.maximum(sims - cover[:, None], 0.0).sum(axis=0)
        margins[selected] = -np.inf
        pick = int(np.argmax(margins))
        selected.append(pick)
        gains.append(float(margins[pick]))
        cover = np.maximum(cover, sims[:, pick])
    return SelectionResult(
        method="mfl",
        budget=m,
        selected=selected,
        marginal_gains=gains,
        seed=None,
        wall_time=time.perf_counter() - started,
    )


def fast_votek_select(knn: list, m: int, rho: float = 10.0) -> SelectionResult:
    """Discounted reverse-k-NN voting.

    Each vertex u is scored by its voters (vertices whose k-NN list contains
    u); a voter's ballot is worth rho^-(number of selected vertices whose
    k-NN list contains the voter).  Scores are recomputed after every pick.
    """
    started = time.perf_counter()
    n = len(knn)
    _check_budget(m, n)
    if rho <= 1.0:
        raise ValueError("rho must be > 1")
    voters = np.concatenate(
        [np.full(len(lst), v, dtype=np.int64) for v, lst in enumerate(knn)]
    ) if n else np.zeros(0, dtype=np.int64)
    votes_for = np.concatenate(
        [np.asarray(lst, dtype=np.int64) for lst in knn]
    ) if n else np.zeros(0, dtype=np.int64)
    discount = np.zeros(n, dtype=np.int64)
    selected: list[int] = []
    for _ in range(m):
        weights = np.power(rho, -discount.astype(np.float64))
        scores = np.zeros(n, dtype=np.float64)
        np.add.at(scores, votes_for, weights[voters])
        scores[selected] = -np.inf
        pick = int(np.argmax(scores))
        selected.append(pick)
        for v in knn[pick]:
            discount[int(v)] += 1
    return SelectionResult(
        method="fast-votek",
        budget=m,
        selected=selected,
        seed=None,
        wall_time=time.perf_counter() - started,
    )


def knn_lists(e: EmbeddingSet, k: int) -> list[list[int]]:
    """Per-vertex k-NN successor lists for the graph-free selectors."""
    return [knn_successors(e, v, k) for v in range(e.n)]
