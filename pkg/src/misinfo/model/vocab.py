"""Tokenizer and vocabulary.

The tokenizer lowercases, folds URLs and mentions into marker tokens, strips
the '#' off hashtags, and keeps alphanumeric word characters. Vocabulary ids
are dense, with id 0 reserved for padding and id 1 for unknown tokens.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from pathlib import Path
from typing import Iterable

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
URL_TOKEN = "<url>"
MENTION_TOKEN = "<user>"
PAD_ID = 0
UNK_ID = 1

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#(\w+)")
_TOKEN_RE = re.compile(r"<url>|<user>|[a-z0-9']+")


def tokenize(text: str, max_len: int | None = None) -> list[str]:
    cleaned = _URL_RE.sub(f" {URL_TOKEN} ", text)
    cleaned = _MENTION_RE.sub(f" {MENTION_TOKEN} ", cleaned)
    cleaned = _HASHTAG_RE.sub(r" \1 ", cleaned)
    tokens = _TOKEN_RE.findall(cleaned.lower())
    return tokens[:max_len] if max_len else tokens


class Vocabulary:
    def __init__(self, tokens: list[str]):
        """``tokens`` is the full id-ordered list including pad and unk."""
        if tokens[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ValueError("vocabulary must start with pad and unk tokens")
        self._tokens = list(tokens)
        self._ids = {t: i for i, t in enumerate(self._tokens)}
        if len(self._ids) != len(self._tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self._tokens)

    def id_of(self, token: str) -> int:
        return self._ids.get(token, UNK_ID)

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    def encode(self, text: str, max_len: int = 128) -> list[int]:
        """Token ids for a text, truncated (never split) at max_len."""
        return [self.id_of(t) for t in tokenize(text, max_len=max_len)]

    def content_hash(self) -> str:
        """Stable digest of the token list; checkpoints pin this."""
        joined = "\n".join(self._tokens).encode("utf-8")
        return hashlib.sha256(joined).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self._tokens, ensure_ascii=False))

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls(json.loads(Path(path).read_text()))


def build_vocab(corpus: Iterable[str], max_size: int) -> Vocabulary:
    """Top-(max_size - 2) tokens by frequency, ties broken lexicographically."""
    if max_size < 3:
        raise ValueError("max_size must leave room for pad, unk and content")
    counts: Counter[str] = Counter()
    n_texts = 0
    for text in corpus:
        n_texts += 1
        counts.update(tokenize(text))
    if n_texts == 0 or not counts:
        raise ValueError("cannot build vocabulary from an empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [t for t, _ in ranked[: max_size - 2]]
    return Vocabulary([PAD_TOKEN, UNK_TOKEN] + keep)
