"""External-knowledge retrieval: query shortening, sentence selection, pooling.

For a tweet we build a shortened query, fetch documents through a SearchClient,
pick the k sentences closest to the tweet text by cosine similarity over the
configured sentence encoder, and mean-pool their embeddings into one support
vector. Retrieval results are cached on disk by tweet_id because retrieval
dominates serving latency.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from misinfo.embeddings import SentenceEncoder, cosine_similarity
from misinfo.records import TweetRecord

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#(\w+)")
_TOKEN_RE = re.compile(r"[a-z0-9']+")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+|\n+")

STOPWORDS = frozenset("""
a about above after again against all am an and any are aren't as at be because
been before being below between both but by can't cannot could couldn't did
didn't do does doesn't doing don't down during each few for from further had
hadn't has hasn't have haven't having he he'd he'll he's her here here's hers
herself him himself his how how's i i'd i'll i'm i've if in into is isn't it
it's its itself let's me more most mustn't my myself no nor not of off on once
only or other ought our ours ourselves out over own same shan't she she'd
she'll she's should shouldn't so some such than that that's the their theirs
them themselves then there there's these they they'd they'll they're they've
this those through to too under until up very was wasn't we we'd we'll we're
we've were weren't what what's when when's where where's which while who who's
whom why why's with won't would wouldn't you you'd you'll you're you've your
yours yourself yourselves
""".split())


class SearchClient(Protocol):
    """Returns ranked (url, document text) results for a query."""

    def search(self, query: str, max_results: int = 5) -> list[tuple[str, str]]:
        ...


class OfflineSearchClient:
    """Deterministic search over a local corpus; the only client tests use.

    Corpus layout: ``documents.jsonl`` with {"url": ..., "text": ...} lines
    and ``index.json`` mapping query string to a ranked list of urls.
    """

    def __init__(self, corpus_dir: str | Path):
        corpus_dir = Path(corpus_dir)
        self._documents: dict[str, str] = {}
        with (corpus_dir / "documents.jsonl").open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    doc = json.loads(line)
                    self._documents[doc["url"]] = doc["text"]
        self._index: dict[str, list[str]] = json.loads(
            (corpus_dir / "index.json").read_text()
        )

    def search(self, query: str, max_results: int = 5) -> list[tuple[str, str]]:
        urls = self._index.get(query, [])[:max_results]
        return [(u, self._documents[u]) for u in urls if u in self._documents]


@dataclass
class ExternalKnowledge:
    """Top supporting sentences for one tweet plus their pooled embedding."""

    tweet_id: str
    sentences: list[tuple[str, str, float]] = field(default_factory=list)
    embedding: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        scores = [s[2] for s in self.sentences]
        if any(scores[i] < scores[i + 1] for i in range(len(scores) - 1)):
            raise ValueError("sentence similarities must be sorted descending")


def shorten_query(text: str, token_budget: int = 10) -> str:
    """Strip URLs, mentions and stopwords; keep hashtag words; truncate.

    Returns the empty string when nothing survives; callers fall back to the
    raw text.
    """
    cleaned = _URL_RE.sub(" ", text)
    cleaned = _MENTION_RE.sub(" ", cleaned)
    cleaned = _HASHTAG_RE.sub(r"\1", cleaned)
    tokens = [t for t in _TOKEN_RE.findall(cleaned.lower()) if t not in STOPWORDS]
    return " ".join(tokens[:token_budget])


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT_RE.split(text) if s.strip()]


def select_sentences(
    tweet_text: str,
    documents: Sequence[tuple[str, str]],
    encoder: SentenceEncoder,
    k: int = 10,
) -> list[tuple[str, str, float]]:
    """Top-k document sentences by cosine similarity to the tweet text.

    Documents are walked in relevance order and sentence-split; candidates are
    ranked globally, with document rank and in-document position breaking
    ties, so the result matches an exhaustive cosine ranking. Returns
    (sentence, source_url, score) sorted by descending score; empty when no
    sentences are retrievable.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    candidates: list[tuple[str, str, int, int]] = []
    for doc_rank, (url, text) in enumerate(documents):
        for pos, sent in enumerate(split_sentences(text)):
            candidates.append((sent, url, doc_rank, pos))
    if not candidates:
        return []

    tweet_vec = encoder.encode([tweet_text])[0]
    sent_vecs = encoder.encode([c[0] for c in candidates])
    scored = [
        (sim, c[2], c[3], c[0], c[1])
        for c, sim in zip(candidates, (cosine_similarity(tweet_vec, v) for v in sent_vecs))
    ]
    scored.sort(key=lambda item: (-item[0], item[1], item[2]))
    return [(sent, url, float(sim)) for sim, _, _, sent, url in scored[:k]]


def embed_external_knowledge(
    sentences: Sequence[str], encoder: SentenceEncoder
) -> np.ndarray:
    """Mean-pool per-sentence embeddings; empty input pools to the zero vector."""
    if not sentences:
        return np.zeros(encoder.dim, dtype=np.float64)
    return encoder.encode(list(sentences)).mean(axis=0)


class KnowledgeCache:
    """On-disk cache of retrieval results keyed by tweet_id; last writer wins."""

    def __init__(self, cache_dir: str | Path):
        self._dir = Path(cache_dir)
        self._dir.mkdir(parents=True, exist_ok=True)

    def _path(self, tweet_id: str) -> Path:
        safe = re.sub(r"[^A-Za-z0-9_-]", "_", tweet_id)
        return self._dir / f"{safe}.json"

    def get(self, tweet_id: str) -> Optional[ExternalKnowledge]:
        path = self._path(tweet_id)
        if not path.exists():
            return None
        data = json.loads(path.read_text())
        return ExternalKnowledge(
            tweet_id=data["tweet_id"],
            sentences=[tuple(s) for s in data["sentences"]],
            embedding=np.array(data["embedding"], dtype=np.float64),
        )

    def put(self, knowledge: ExternalKnowledge) -> None:
        payload = {
            "tweet_id": knowledge.tweet_id,
            "sentences": [list(s) for s in knowledge.sentences],
            "embedding": knowledge.embedding.tolist(),
        }
        self._path(knowledge.tweet_id).write_text(json.dumps(payload))


def retrieve_external_knowledge(
    tweet: TweetRecord,
    client: SearchClient,
    encoder: SentenceEncoder,
    k: int = 10,
    max_results: int = 5,
    cache: Optional[KnowledgeCache] = None,
) -> ExternalKnowledge:
    """Full retrieval path for one tweet, cache-first."""
    if cache is not None:
        hit = cache.get(tweet.tweet_id)
        if hit is not None:
            return hit
    query = shorten_query(tweet.text)
    if not query:
        query = tweet.text
    documents = client.search(query, max_results=max_results)
    selected = select_sentences(tweet.text, documents, encoder, k=k)
    knowledge = ExternalKnowledge(
        tweet_id=tweet.tweet_id,
        sentences=selected,
        embedding=embed_external_knowledge([s[0] for s in selected], encoder),
    )
    if cache is not None:
        cache.put(knowledge)
    return knowledge
