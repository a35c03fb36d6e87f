"""Independent-cascade simulation, Monte-Carlo influence estimation, and an
exact small-graph oracle.

Randomness contract
-------------------
Every influence estimate draws from a counter-based (Philox) stream keyed by
SHA-256 of (master seed, subset content).  Repetition r consumes row r of a
single (reps, |E|) coin matrix, so results are bit-identical regardless of
execution order or thread count.  One coin position is dedicated to each
directed edge; an edge is therefore tossed at most once per run, and the run
distribution is identical to drawing coins on demand (live-edge equivalence).
Estimation counts per-run reachability over live edges, which equals the
round-by-round cascade's activated set exactly.

Influence counts seed vertices: a run scores |S| plus newly activated.
"""

import hashlib
import json
import math
import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

from .graph import DiffusionGraph

MAX_UNCERTAIN_EDGES = 20  # enumeration bound for the exact oracle
DEFAULT_REPS = 10


@dataclass
class InfluenceEstimate:
    """Monte-Carlo estimate of expected activated-vertex count (seeds included)."""

    mean: float
    std_error: float
    reps: int
    seed: int
    subset_size: int


@dataclass
class CascadeTrace:
    """One simulated cascade: per-round (vertex, activating predecessor) pairs."""

    seed_set: list[int]
    rounds: list[list[tuple[int, int]]]

    @property
    def newly_activated(self) -> int:
        return sum(len(r) for r in self.rounds)

    @property
    def total_activated(self) -> int:
        return len(self.seed_set) + self.newly_activated

    def to_payload(self) -> dict:
        return {
            "seed_set": list(self.seed_set),
            "rounds": [
                [{"vertex": v, "activated_by": a} for v, a in rnd]
                for rnd in self.rounds
            ],
        }


def export_cascade_trace(t: CascadeTrace, path: str) -> None:
    """Write a trace as round-annotated JSON for external plotting."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(t.to_payload(), fh, indent=2)
        fh.write("\n")


def subset_key(s) -> bytes:
    """Canonical bytes for a vertex subset (sorted, deduplicated)."""
    return b",".join(str(v).encode() for v in sorted(set(int(v) for v in s)))


def stream_key(label: bytes, seed: int, extra: bytes = b"") -> np.ndarray:
    """Two uint64 Philox key words derived from (label, seed, extra)."""
    h = hashlib.sha256()
    h.update(label)
    # two's-complement 64-bit view; any Python int is accepted
    h.update(struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF))
    h.update(extra)
    return np.frombuffer(h.digest()[:16], dtype=np.uint64)


def cascade_stream(seed: int, s) -> np.random.Generator:
    """The coin stream for subset s under a master seed; rep r occupies
    draws [r*|E|, (r+1)*|E|)."""
    key = stream_key(b"cascade", seed, subset_key(s))
    return np.random.Generator(np.random.Philox(key=key))


def _check_subset(g: DiffusionGraph, s) -> list[int]:
    verts = sorted(set(int(v) for v in s))
    if not verts:
        raise ValueError("subset must be nonempty")
    if verts[0] < 0 or verts[-1] >= g.n:
        bad = verts[0] if verts[0] < 0 else verts[-1]
        raise ValueError(f"vertex {bad} out of range for n={g.n}")
    return verts


def simulate_cascade(g: DiffusionGraph, s, rng_stream) -> CascadeTrace:
    """Run one independent cascade from seed set s.

    The frontier starts at s; each frontier vertex, in ascending index order,
    tosses one coin per not-yet-activated successor and activates it iff
    tau <= p.  p = 0 edges never fire, p = 1 edges always fire.  Newly
    activated vertices form the next frontier; stops on an empty frontier.
    """
    seeds = _check_subset(g, s)
    coins = np.asarray(rng_stream.random(g.num_edges), dtype=np.float64)
    activated = np.zeros(g.n, dtype=bool)
    activated[seeds] = True
    frontier = seeds
    rounds = []
    offsets, targets, probs = g.offsets, g.targets, g.probs
    while frontier:
        this_round = []
        for v in frontier:
            for j in range(int(offsets[v]), int(offsets[v + 1])):
                u = int(targets[j])
                if activated[u]:
                    continue
                p = probs[j]
                if p > 0.0 and coins[j] <= p:
                    activated[u] = True
                    this_round.append((u, v))
        if not this_round:
            break
        rounds.append(this_round)
        frontier = sorted(u for u, _ in this_round)
    return CascadeTrace(seed_set=seeds, rounds=rounds)


@njit(cache=True, nogil=True)
def _live_reach_counts(offsets, targets, live, seeds):
    """Activated-vertex count per run: seeds plus everything reachable over
    that run's live edges (identical to the round-by-round cascade set)."""
    runs = live.shape[0]
    n = offsets.shape[0] - 1
    counts = np.zeros(runs, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    act = np.zeros(n, dtype=np.bool_)
    for r in range(runs):
        act[:] = False
        top = 0
        total = 0
        for i in range(seeds.shape[0]):
            s = seeds[i]
            act[s] = True
            stack[top] = s
            top += 1
            total += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for j in range(offsets[v], offsets[v + 1]):
                if live[r, j]:
                    u = targets[j]
                    if not act[u]:
                        act[u] = True
                        stack[top] = u
                        top += 1
                        total += 1
        counts[r] = total
    return counts


def estimate_influence(
    g: DiffusionGraph, s, reps: int = DEFAULT_REPS, seed: int = 0
) -> InfluenceEstimate:
    """Average activated count (seeds included) over ``reps`` cascades.

    Deterministic for fixed (g, s, reps, seed) regardless of execution order:
    counts are integers and the coin matrix is derived purely from the key.
    """
    seeds = _check_subset(g, s)
    if reps < 1:
        raise ValueError("reps must be >= 1")
    coins = cascade_stream(seed, seeds).random((reps, g.num_edges))
    live = (coins <= g.probs) & (g.probs > 0.0)
    counts = _live_reach_counts(
        g.offsets, g.targets, np.ascontiguousarray(live),
        np.asarray(seeds, dtype=np.int64),
    )
    total = int(counts.sum())
    sq_total = int((counts.astype(np.int64) ** 2).sum())
    mean = total / reps
    if reps > 1:
        var = max(sq_total - total * total / reps, 0.0) / (reps - 1)
        std_error = math.sqrt(var) / math.sqrt(reps)
    else:
        std_error = 0.0
    return InfluenceEstimate(
        mean=mean,
        std_error=std_error,
        reps=reps,
        seed=seed,
        subset_size=len(seeds),
    )


class ExactOracle:
    """Exact expected influence by live-edge enumeration.

    Every edge with 0 < p < 1 is independently live with probability p; the
    expected influence of S is the probability-weighted reachable-set size
    over all live-edge configurations.  Admissible only when the number of
    uncertain edges is at most MAX_UNCERTAIN_EDGES.
    """

    def __init__(self, g: DiffusionGraph):
        self.g = g
        self.n = g.n
        src = g.edge_sources
        uncertain = np.flatnonzero((g.probs > 0.0) & (g.probs < 1.0))
        if uncertain.size > MAX_UNCERTAIN_EDGES:
            raise ValueError(
                f"too many uncertain edges ({uncertain.size} > {MAX_UNCERTAIN_EDGES})"
            )
        sure = np.flatnonzero(g.probs == 1.0)
        u = uncertain.size
        n_cfg = 1 << u
        bits = (np.arange(n_cfg, dtype=np.uint32)[:, None] >> np.arange(u)) & 1
        bits = bits.astype(bool)
        p_unc = g.probs[uncertain]
        self.config_probs = np.where(bits, p_unc, 1.0 - p_unc).prod(axis=1)
        if self.n <= 64:
            self.masks = self._closure_masks_np(src, sure, uncertain, bits)
        else:
            self.masks = self._closure_masks_py(src, sure, uncertain, bits)

    def _closure_masks_np(self, src, sure, uncertain, bits):
        n, n_cfg = self.n, bits.shape[0]
        adj = np.zeros((n_cfg, n, n), dtype=np.uint8)
        adj[:, np.arange(n), np.arange(n)] = 1
        if sure.size:
            adj[:, src[sure], self.g.targets[sure]] = 1
        for j, e in enumerate(uncertain):
            adj[bits[:, j], src[e], self.g.targets[e]] = 1
        reach = adj
        while True:
            step = (np.matmul(reach, reach) > 0).astype(np.uint8)
            if np.array_equal(step, reach):
                break
            reach = step
        pows = (np.uint64(1) << np.arange(n, dtype=np.uint64)).astype(np.uint64)
        return (reach.astype(np.uint64) * pows).sum(axis=2)  # (n_cfg, n)

    def _closure_masks_py(self, src, sure, uncertain, bits):
        n, n_cfg = self.n, bits.shape[0]
        masks = np.zeros((n_cfg, n), dtype=object)
        base_adj = [1 << v for v in range(n)]
        for e in sure:
            base_adj[int(src[e])] |= 1 << int(self.g.targets[e])
        for cfg in range(n_cfg):
            adj = list(base_adj)
            for j, e in enumerate(uncertain):
                if bits[cfg, j]:
                    adj[int(src[e])] |= 1 << int(self.g.targets[e])
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
            masks[cfg] = reach
        return masks

    def _popcount(self, reach):
        if self.n <= 64:
            return np.bitwise_count(reach).astype(np.float64)
        return np.array([int(x).bit_count() for x in reach], dtype=np.float64)

    def influence(self, s) -> float:
        verts = _check_subset(self.g, s)
        if self.n <= 64:
            reach = np.bitwise_or.reduce(self.masks[:, verts], axis=1)
        else:
            reach = self.masks[:, verts[0]].copy()
            for v in verts[1:]:
                reach |= self.masks[:, v]
        return float(self.config_probs @ self._popcount(reach))

    def all_subset_influences(self) -> np.ndarray:
        """f over every subset, indexed by vertex bitmask; requires n <= 16."""
        if self.n > 16:
            raise ValueError("all-subset table limited to n <= 16")
        out = np.zeros(1 << self.n, dtype=np.float64)
        for mask in range(1, 1 << self.n):
            members = [v for v in range(self.n) if mask >> v & 1]
            out[mask] = self.influence(members)
        return out


def exact_influence(g: DiffusionGraph, s) -> float:
    """Exact expected influence of s (seeds included); see ExactOracle."""
    return ExactOracle(g).influence(s)
