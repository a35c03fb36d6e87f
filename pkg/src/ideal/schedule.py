"""Diffusion-ordered auto-annotation scheduling.

Starting from the manually annotated subset, cascades propagate over the
graph; every vertex activated in a round is scheduled for automatic
annotation using its most similar already-annotated examples as prompt
sources.  Cascades can die out before covering the pool, so a fallback rule
keeps the schedule total: the unannotated vertex most similar to any
annotated one is activated directly and cascading resumes from it.  The
actual labeling call is an external hook; ``execute_schedule`` walks the
rounds in order.
"""

import json
from dataclasses import dataclass

import numpy as np

from .diffusion import stream_key, subset_key
from .embeddings import EmbeddingSet, normalize
from .graph import DiffusionGraph

DEFAULT_PROMPTS_PER_TARGET = 5

KIND_CASCADE = "cascade"
KIND_FALLBACK = "fallback"


@dataclass
class ScheduleRecord:
    target: str
    prompt_sources: list[str]
    kind: str  # "cascade" or "fallback"


@dataclass
class AnnotationSchedule:
    manual: list[str]
    rounds: list[list[ScheduleRecord]]

    @property
    def scheduled_total(self) -> int:
        return len(self.manual) + sum(len(r) for r in self.rounds)

    @property
    def fallback_count(self) -> int:
        return sum(
            1 for rnd in self.rounds for rec in rnd if rec.kind == KIND_FALLBACK
        )

    def to_payload(self) -> dict:
        return {
            "manual": list(self.manual),
            "rounds": [
                [
                    {
                        "target": rec.target,
                        "prompt_sources": list(rec.prompt_sources),
                        "kind": rec.kind,
                    }
                    for rec in rnd
                ]
                for rnd in self.rounds
            ],
        }


def save_schedule(schedule: AnnotationSchedule, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schedule.to_payload(), fh, indent=2)
        fh.write("\n")


def diffusion_schedule(
    g: DiffusionGraph,
    e: EmbeddingSet,
    manual,
    c: int = DEFAULT_PROMPTS_PER_TARGET,
    seed: int = 0,
) -> AnnotationSchedule:
    """Schedule every non-manual vertex for annotation in diffusion order.

    Prompt sources for a target are its min(c, available) most similar
    examples among everything annotated in strictly earlier rounds (or
    manually); similarity is embedding cosine, ties break by ascending id.
    """
    if g.n != e.n:
        raise ValueError(f"graph has {g.n} vertices but pool has {e.n}")
    if g.built_from and g.built_from != e.content_hash():
        raise ValueError("graph was not built from this embedding pool")
    if c < 1:
        raise ValueError("c must be >= 1")
    manual_idx = sorted(set(int(v) for v in manual))
    if not manual_idx:
        raise ValueError("manual set must be nonempty")
    if manual_idx[0] < 0 or manual_idx[-1] >= g.n:
        raise ValueError("manual vertex out of range")

    unit = normalize(e).vectors
    sims = unit @ unit.T
    np.fill_diagonal(sims, -np.inf)  # a vertex never prompts itself

    key = stream_key(b"schedule", seed, subset_key(manual_idx))
    coins = np.random.Generator(np.random.Philox(key=key)).random(g.num_edges)
    live = (coins <= g.probs) & (g.probs > 0.0)

    annotated = np.zeros(g.n, dtype=bool)
    annotated[manual_idx] = True
    annotated_list = list(manual_idx)  # annotation order, manual first
    offsets, targets = g.offsets, g.targets

    def prompt_sources(v, known):
        ranked = sorted(known, key=lambda a: (-sims[v, a], e.ids[a]))
        return [e.ids[a] for a in ranked[: min(c, len(known))]]

    rounds: list[list[ScheduleRecord]] = []
    frontier = list(manual_idx)
    while True:
        known = list(annotated_list)
        newly: list[int] = []
        for v in frontier:
            for j in range(int(offsets[v]), int(offsets[v + 1])):
                u = int(targets[j])
                if not annotated[u] and live[j]:
                    annotated[u] = True
                    newly.append(u)
        if newly:
            rounds.append(
                [
                    ScheduleRecord(
                        target=e.ids[u],
                        prompt_sources=prompt_sources(u, known),
                        kind=KIND_CASCADE,
                    )
                    for u in newly
                ]
            )
            annotated_list.extend(newly)
            frontier = sorted(newly)
            continue
        if annotated.all():
            break
        # cascade died out: directly activate the unannotated vertex most
        # similar to any annotated one, then resume cascading from it
        pending = np.flatnonzero(~annotated)
        best_sim = sims[np.ix_(pending, annotated_list)].max(axis=1)
        pick = int(
            min(
                range(len(pending)),
                key=lambda i: (-best_sim[i], e.ids[int(pending[i])]),
            )
        )
        u = int(pending[pick])
        rounds.append(
            [
                ScheduleRecord(
                    target=e.ids[u],
                    prompt_sources=prompt_sources(u, annotated_list),
                    kind=KIND_FALLBACK,
                )
            ]
        )
        annotated[u] = True
        annotated_list.append(u)
        frontier = [u]
    return AnnotationSchedule(manual=[e.ids[v] for v in manual_idx], rounds=rounds)


def execute_schedule(schedule: AnnotationSchedule, annotate) -> dict:
    """Run an annotator callable over the schedule in round order.

    ``annotate(target_id, prompt_source_ids)`` returns the label for one
    target; manual ids must already be covered by the caller's label store.
    Returns {target id: label} for every automatically annotated example.
    """
    labels = {}
    for rnd in schedule.rounds:
        for rec in rnd:
            labels[rec.target] = annotate(rec.target, rec.prompt_sources)
    return labels


def stub_annotator(label_map: dict):
    """Annotator hook that copies labels from a provided map (for tests)."""

    def annotate(target_id, prompt_source_ids):
        return label_map[target_id]

    return annotate
