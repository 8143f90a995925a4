"""Fixed-length tweet and user feature vectors.

Slot order is a compatibility contract for saved models; see TWEET_FEATURE_SCHEMA
and USER_FEATURE_SCHEMA below, and SCHEMA_VERSION which is embedded into model
checkpoints. Changing any slot requires bumping SCHEMA_VERSION.

Tweet vector layout (TWEET_FEATURE_DIM slots):
    0 hashtag_count          4 url_count            8  sentiment
    1 favourite_count        5 mean_domain_score    9.. POS tag counts (POS_TAGS order)
    2 retweet_count          6 mention_count        .. linguistic sub-entity counts
    3 retweet_status (0/1)   7 media_count             (SUBENTITY_KINDS order)

User vector layout (8 slots): verified, followers_count, favourites_count,
statuses_count, tweets in trailing 7 days, description length,
description has URL (0/1), mean inter-tweet gap in seconds.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Optional, Sequence
from urllib.parse import urlsplit

import numpy as np

from misinfo.records import TweetRecord, UserRecord

SCHEMA_VERSION = "features-v1"

# Collapsed part-of-speech tagset; heuristic tagger below.
POS_TAGS = ("noun", "verb", "adj", "adv", "pronoun", "determiner", "preposition",
            "conjunction", "number", "other")

# Surface-level sub-entities counted from the raw text.
SUBENTITY_KINDS = ("mention", "hashtag", "url", "emoji", "exclamation", "question",
                   "ellipsis", "allcaps_word", "numeric_token")

TWEET_FEATURE_SCHEMA = (
    "hashtag_count", "favourite_count", "retweet_count", "retweet_status",
    "url_count", "mean_domain_score", "mention_count", "media_count", "sentiment",
    *(f"pos_{t}" for t in POS_TAGS),
    *(f"ent_{k}" for k in SUBENTITY_KINDS),
)
TWEET_FEATURE_DIM = len(TWEET_FEATURE_SCHEMA)

USER_FEATURE_SCHEMA = (
    "verified", "followers_count", "favourites_count", "statuses_count",
    "tweets_per_week", "description_length", "description_has_url",
    "mean_inter_tweet_seconds",
)
USER_FEATURE_DIM = len(USER_FEATURE_SCHEMA)

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#\w+")
_EMOJI_RE = re.compile(
    "[\U0001F300-\U0001FAFF\U00002600-\U000027BF\U0001F000-\U0001F0FF\U00002190-\U000021FF]"
)
_WORD_RE = re.compile(r"[A-Za-z']+")
_NUMBER_RE = re.compile(r"^\d[\d,.]*$")

_PRONOUNS = {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us",
             "them", "my", "your", "his", "its", "our", "their", "this", "that",
             "these", "those", "who", "whom", "what", "which"}
_DETERMINERS = {"a", "an", "the", "some", "any", "no", "every", "each", "either",
                "neither", "all", "both", "few", "many", "much", "several"}
_PREPOSITIONS = {"in", "on", "at", "by", "for", "with", "about", "against", "between",
                 "into", "through", "during", "before", "after", "above", "below",
                 "to", "from", "up", "down", "of", "off", "over", "under"}
_CONJUNCTIONS = {"and", "or", "but", "nor", "so", "yet", "because", "although",
                 "while", "if", "unless", "since", "when", "whereas"}
_COMMON_VERBS = {"is", "am", "are", "was", "were", "be", "been", "being", "have",
                 "has", "had", "do", "does", "did", "will", "would", "can", "could",
                 "shall", "should", "may", "might", "must", "say", "says", "said",
                 "get", "got", "go", "goes", "went", "make", "makes", "made", "know",
                 "take", "causes", "cause", "caused", "show", "shows", "showed"}
_ADVERBS = {"not", "very", "too", "also", "just", "now", "then", "here", "there",
            "never", "always", "often", "soon", "still", "already"}

# Small built-in polarity lexicon; callers may supply their own.
DEFAULT_SENTIMENT_LEXICON: dict[str, float] = {
    "good": 0.7, "great": 0.8, "excellent": 0.9, "amazing": 0.8, "awesome": 0.9,
    "best": 0.9, "better": 0.5, "love": 0.8, "loved": 0.8, "like": 0.4,
    "happy": 0.8, "glad": 0.6, "safe": 0.5, "effective": 0.6, "success": 0.7,
    "successful": 0.7, "win": 0.6, "positive": 0.5, "recover": 0.5, "recovered": 0.5,
    "hope": 0.5, "helpful": 0.6, "help": 0.4, "protect": 0.5, "support": 0.4,
    "true": 0.4, "trusted": 0.6, "verified": 0.5, "calm": 0.4, "heal": 0.5,
    "bad": -0.7, "worse": -0.6, "worst": -0.9, "terrible": -0.9, "horrible": -0.9,
    "awful": -0.8, "hate": -0.8, "fear": -0.6, "afraid": -0.6, "scary": -0.6,
    "sad": -0.6, "angry": -0.7, "danger": -0.6, "dangerous": -0.7, "deadly": -0.8,
    "die": -0.8, "dead": -0.8, "death": -0.8, "kill": -0.9, "kills": -0.9,
    "sick": -0.5, "ill": -0.5, "hoax": -0.7, "fake": -0.6, "lie": -0.7, "lies": -0.7,
    "panic": -0.6, "crisis": -0.5, "fail": -0.6, "failed": -0.6, "wrong": -0.5,
    "negative": -0.5, "poison": -0.8, "toxic": -0.7, "threat": -0.6, "risk": -0.4,
}


def sentiment(text: str, lexicon: Optional[dict[str, float]] = None) -> float:
    """Lexicon-average polarity in [-1, 1]; 0.0 when nothing matches."""
    lex = DEFAULT_SENTIMENT_LEXICON if lexicon is None else lexicon
    words = _WORD_RE.findall(text.lower())
    hits = [lex[w] for w in words if w in lex]
    if not hits:
        return 0.0
    return float(np.clip(np.mean(hits), -1.0, 1.0))


def pos_tag(word: str) -> str:
    """Heuristic collapsed POS tag for a lowercase word."""
    if _NUMBER_RE.match(word):
        return "number"
    if word in _PRONOUNS:
        return "pronoun"
    if word in _DETERMINERS:
        return "determiner"
    if word in _PREPOSITIONS:
        return "preposition"
    if word in _CONJUNCTIONS:
        return "conjunction"
    if word in _COMMON_VERBS:
        return "verb"
    if word in _ADVERBS or word.endswith("ly"):
        return "adv"
    if word.endswith(("ing", "ed", "ize", "ise", "ate")):
        return "verb"
    if word.endswith(("ous", "ful", "ive", "al", "ic", "able", "ible", "less", "est")):
        return "adj"
    return "noun"


def _pos_counts(text: str) -> list[int]:
    counts = dict.fromkeys(POS_TAGS, 0)
    stripped = _URL_RE.sub(" ", text)
    for raw in _WORD_RE.findall(stripped):
        counts[pos_tag(raw.lower())] += 1
    return [counts[t] for t in POS_TAGS]


def _subentity_counts(text: str) -> list[int]:
    words = text.split()
    counts = {
        "mention": len(_MENTION_RE.findall(text)),
        "hashtag": len(_HASHTAG_RE.findall(text)),
        "url": len(_URL_RE.findall(text)),
        "emoji": len(_EMOJI_RE.findall(text)),
        "exclamation": text.count("!"),
        "question": text.count("?"),
        "ellipsis": text.count("..."),
        "allcaps_word": sum(1 for w in words if len(w) > 1 and w.isalpha() and w.isupper()),
        "numeric_token": sum(1 for w in words if _NUMBER_RE.match(w)),
    }
    return [counts[k] for k in SUBENTITY_KINDS]


@dataclass
class DomainScoreTable:
    """Static credibility scores per domain, all in [0, 1]."""

    scores: dict[str, float] = field(default_factory=dict)
    default_score: float = 0.5

    def __post_init__(self):
        for domain, score in self.scores.items():
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"domain score out of [0,1] for {domain}: {score}")
        if not 0.0 <= self.default_score <= 1.0:
            raise ValueError("default_score must be in [0,1]")

    @classmethod
    def from_file(cls, path: str | Path) -> "DomainScoreTable":
        data = json.loads(Path(path).read_text())
        return cls(scores={k.lower(): float(v) for k, v in data.get("scores", {}).items()},
                   default_score=float(data.get("default_score", 0.5)))

    def score_url(self, url: str) -> float:
        host = urlsplit(url).netloc.lower()
        host = host.split(":")[0]
        while host:
            if host in self.scores:
                return self.scores[host]
            if "." not in host:
                break
            host = host.split(".", 1)[1]  # fall back to parent domain
        return self.default_score


def default_domain_table() -> DomainScoreTable:
    """Table shipped with the package (data/domain_scores.json)."""
    return DomainScoreTable.from_file(Path(__file__).parent / "data" / "domain_scores.json")


def extract_tweet_features(
    tweet: TweetRecord, table: Optional[DomainScoreTable] = None
) -> np.ndarray:
    """Deterministic tweet feature vector of length TWEET_FEATURE_DIM."""
    if not tweet.text:
        raise ValueError(f"tweet {tweet.tweet_id}: text must be non-empty")
    table = table or DomainScoreTable()
    if tweet.urls:
        domain_score = float(np.mean([table.score_url(u) for u in tweet.urls]))
    else:
        domain_score = table.default_score
    head = [
        float(len(tweet.hashtags)),
        float(tweet.favourite_count),
        float(tweet.retweet_count),
        1.0 if tweet.is_retweet else 0.0,
        float(len(tweet.urls)),
        domain_score,
        float(len(_MENTION_RE.findall(tweet.text))),
        float(tweet.media_count),
        sentiment(tweet.text),
    ]
    vec = np.array(head + _pos_counts(tweet.text) + _subentity_counts(tweet.text),
                   dtype=np.float64)
    assert vec.shape == (TWEET_FEATURE_DIM,)
    return vec


def extract_user_features(
    user: Optional[UserRecord],
    recent_tweets: Sequence[datetime] = (),
    reference_time: Optional[datetime] = None,
) -> np.ndarray:
    """User feature vector of length 8.

    ``recent_tweets`` must be sorted ascending. Tweets-per-week counts the
    trailing 7 days ending at ``reference_time`` (defaults to the newest
    timestamp). A user with fewer than two tweets has inter-tweet gap 0.
    Missing user metadata (None) falls back to neutral defaults.
    """
    user = user or UserRecord(user_id="unknown")
    times = list(recent_tweets)
    if any(times[i] > times[i + 1] for i in range(len(times) - 1)):
        raise ValueError("recent_tweets must be sorted ascending")

    if times:
        ref = reference_time or times[-1]
        window_start = ref - timedelta(days=7)
        per_week = sum(1 for t in times if window_start < t <= ref)
    else:
        per_week = 0
    if len(times) >= 2:
        gaps = [(times[i + 1] - times[i]).total_seconds() for i in range(len(times) - 1)]
        mean_gap = float(np.mean(gaps))
    else:
        mean_gap = 0.0
    if mean_gap < 0:
        raise ValueError("negative inter-tweet duration")

    vec = np.array(
        [
            1.0 if user.verified else 0.0,
            float(user.followers_count),
            float(user.favourites_count),
            float(user.statuses_count),
            float(per_week),
            float(len(user.description)),
            1.0 if _URL_RE.search(user.description) else 0.0,
            mean_gap,
        ],
        dtype=np.float64,
    )
    assert vec.shape == (USER_FEATURE_DIM,)
    return vec


class Normalizer:
    """Per-dimension standardization fitted on the training split only.

    Zero-variance dimensions pass through untouched (no centering, no scaling),
    so constant columns survive round trips bit-for-bit.
    """

    def __init__(self, mean: np.ndarray, scale: np.ndarray, active: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.scale = np.asarray(scale, dtype=np.float64)
        self.active = np.asarray(active, dtype=bool)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.float64)
        out = vec.copy()
        out[..., self.active] = (vec[..., self.active] - self.mean[self.active]) / self.scale[self.active]
        return out

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "active": self.active.astype(int).tolist(),
        }))

    @classmethod
    def load(cls, path: str | Path) -> "Normalizer":
        data = json.loads(Path(path).read_text())
        return cls(np.array(data["mean"]), np.array(data["scale"]),
                   np.array(data["active"], dtype=bool))

    @classmethod
    def identity(cls, dim: int) -> "Normalizer":
        return cls(np.zeros(dim), np.ones(dim), np.zeros(dim, dtype=bool))


def fit_normalizer(train_vectors: Sequence[np.ndarray] | np.ndarray) -> Normalizer:
    """Fit mean/std per dimension over the training vectors. Empty set is fatal."""
    mat = np.asarray(train_vectors, dtype=np.float64)
    if mat.size == 0:
        raise ValueError("cannot fit normalizer on an empty set")
    if mat.ndim != 2:
        raise ValueError(f"expected 2-D array of vectors, got shape {mat.shape}")
    mean = mat.mean(axis=0)
    std = mat.std(axis=0)
    active = std > 0.0
    scale = np.where(active, std, 1.0)
    return Normalizer(mean=mean, scale=scale, active=active)
