"""Sentence encoders behind one batch interface.

Two families are supported:
  hash:<dim>   built-in deterministic character-trigram feature hashing;
               always available offline, encodes the same text to the same
               vector regardless of batching (used by tests and smoke runs)
  anything else is treated as a sentence-transformers model name and loaded
  lazily; loading failures raise EncoderUnavailable with the cause.
"""

import hashlib

import numpy as np


class EncoderUnavailable(ValueError):
    pass


class HashingEncoder:
    """Deterministic trigram-hashing featurizer with a configurable dimension."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("hash encoder dimension must be >= 1")
        self.dim = dim
        self.name = f"hash:{dim}"

    def encode_batch(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            padded = f"^{text}$"
            for j in range(len(padded) - 2):
                digest = hashlib.sha256(padded[j : j + 3].encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "little") % self.dim
                sign = 1.0 if digest[4] & 1 else -1.0
                weight = 1.0 + digest[5] / 255.0
                out[i, bucket] += sign * weight
            if not out[i].any():  # cancellation guard: keep rows loadable
                fallback = int.from_bytes(
                    hashlib.sha256(text.encode("utf-8")).digest()[:4], "little"
                )
                out[i, fallback % self.dim] = 1.0
        return out


class SentenceTransformerEncoder:
    """Thin wrapper over a pretrained sentence-transformers model."""

    def __init__(self, model_name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderUnavailable(
                f"encoder unavailable: sentence-transformers not installed ({exc})"
            ) from exc
        try:
            self.model = SentenceTransformer(model_name)
        except Exception as exc:
            raise EncoderUnavailable(
                f"encoder unavailable: cannot load {model_name!r} ({exc})"
            ) from exc
        self.name = model_name
        self.dim = int(self.model.get_sentence_embedding_dimension())

    def encode_batch(self, texts: list[str]) -> np.ndarray:
        emb = self.model.encode(
            texts,
            batch_size=len(texts),
            convert_to_numpy=True,
            normalize_embeddings=False,
        )
        return np.asarray(emb, dtype=np.float64)


def get_encoder(name: str):
    if name.startswith("hash:"):
        return HashingEncoder(int(name.split(":", 1)[1]))
    return SentenceTransformerEncoder(name)
