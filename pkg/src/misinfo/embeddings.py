"""Sentence-embedding interface and deterministic offline implementation.

Everything downstream (similarity labelling, evidence sentence selection,
support-text pooling) talks to a SentenceEncoder. The hashing encoder is
deterministic and dependency-free, so tests and desk-scale runs never touch
the network; a pretrained contextual encoder can be dropped in behind the
same interface for production use.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9']+")


class SentenceEncoder(Protocol):
    """Maps texts to fixed-dimension vectors. Must be deterministic."""

    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        """Return an array of shape (len(texts), dim)."""
        ...


class HashingSentenceEncoder:
    """Bag-of-words encoder using stable token hashing.

    Each token hashes to a pseudo-random unit direction; a sentence embeds as
    the mean of its token vectors. Identical texts always embed identically,
    across processes and platforms. Empty or token-free text embeds to zero.
    """

    def __init__(self, dim: int = 64):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "little")
            rng = np.random.default_rng(seed)
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            tokens = _TOKEN_RE.findall(text.lower())
            if tokens:
                out[i] = np.mean([self._token_vector(t) for t in tokens], axis=0)
        return out


class PretrainedSentenceEncoder:
    """Adapter over a sentence-transformers model; frozen, inference only.

    Requires model weights to be available locally. Not used by any test.
    """

    def __init__(self, model_name: str = "all-MiniLM-L6-v2"):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(model_name)
        self._model.eval()
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(list(texts), convert_to_numpy=True, show_progress_bar=False),
            dtype=np.float64,
        )


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of two vectors; 0.0 when either is the zero vector."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
