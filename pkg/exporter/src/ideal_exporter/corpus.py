"""Corpus input: one JSON record per line with ``id`` and ``text`` fields."""

import json
from dataclasses import dataclass


@dataclass
class CorpusRecord:
    id: str
    text: str


def read_corpus(path: str) -> list[CorpusRecord]:
    """Load and validate a corpus; ids must be unique, texts nonempty."""
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row_no = len(records) + 1
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"bad json at record {row_no}: {exc}") from exc
            if not isinstance(raw, dict) or "id" not in raw or "text" not in raw:
                raise ValueError(f"missing id/text fields at record {row_no}")
            rid = str(raw["id"])
            text = str(raw["text"])
            if rid in seen:
                raise ValueError(f"duplicate id {rid!r} at record {row_no}")
            if not text:
                raise ValueError(f"empty text at record {row_no} (id {rid!r})")
            seen.add(rid)
            records.append(CorpusRecord(id=rid, text=text))
    if not records:
        raise ValueError(f"empty corpus: {path}")
    return records
