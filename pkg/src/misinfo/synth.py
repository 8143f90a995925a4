"""Synthetic two-topic corpus for desk-scale experiments.

Generates tweet records whose text is the only reliable class signal: each
class owns half of the token alphabet and every tweet mixes in tokens from
the opposite half at a configurable noise rate. Tweet and user metadata are
label-independent noise, so the experiments measure what the text model
learns, not feature leakage.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from misinfo.records import Label, LabelSource, TweetRecord

_EPOCH = datetime(2020, 3, 1, tzinfo=timezone.utc)


@dataclass
class SyntheticCorpus:
    labelled: list[TweetRecord]
    unlabelled: list[TweetRecord]
    test: list[TweetRecord]


def _make_tweet(rng: np.random.Generator, idx: int, cls: Label | None,
                vocab_tokens: int, noise: float, min_len: int, max_len: int,
                labelled: bool) -> TweetRecord:
    half = vocab_tokens // 2
    if cls is None:
        cls_draw = Label.FAKE if rng.random() < 0.5 else Label.GENUINE
    else:
        cls_draw = cls
    own = np.arange(half) if cls_draw is Label.GENUINE else np.arange(half, vocab_tokens)
    other = np.arange(half, vocab_tokens) if cls_draw is Label.GENUINE else np.arange(half)
    # Zipf-ish weights make some tokens common, mirroring natural text.
    weights = 1.0 / np.arange(1, half + 1)
    weights /= weights.sum()
    length = int(rng.integers(min_len, max_len + 1))
    tokens = []
    for _ in range(length):
        pool = other if rng.random() < noise else own
        tokens.append(f"w{pool[rng.choice(half, p=weights)]:03d}")
    text = " ".join(tokens)
    return TweetRecord(
        tweet_id=f"s{idx}",
        text=text,
        user_id=f"u{int(rng.integers(0, 25))}",
        created_at=_EPOCH + timedelta(seconds=idx),
        hashtags=[],
        urls=[],
        favourite_count=int(rng.integers(0, 20)),
        retweet_count=int(rng.integers(0, 10)),
        is_retweet=bool(rng.random() < 0.3),
        label=cls_draw if labelled else None,
        label_source=LabelSource.HUMAN if labelled else None,
    )


def synthetic_corpus(
    n_labelled: int = 200,
    n_unlabelled: int = 2000,
    n_test: int = 400,
    vocab_tokens: int = 500,
    noise: float = 0.35,
    min_len: int = 8,
    max_len: int = 16,
    seed: int = 0,
) -> SyntheticCorpus:
    rng = np.random.default_rng(seed)
    labelled = []
    for i in range(n_labelled):
        cls = Label.GENUINE if i % 2 == 0 else Label.FAKE  # balanced
        labelled.append(_make_tweet(rng, i, cls, vocab_tokens, noise, min_len, max_len, True))
    test = []
    for i in range(n_test):
        cls = Label.GENUINE if i % 2 == 0 else Label.FAKE
        test.append(_make_tweet(rng, n_labelled + i, cls, vocab_tokens, noise,
                                min_len, max_len, True))
    unlabelled = [
        _make_tweet(rng, n_labelled + n_test + i, None, vocab_tokens, noise,
                    min_len, max_len, False)
        for i in range(n_unlabelled)
    ]
    return SyntheticCorpus(labelled=labelled, unlabelled=unlabelled, test=test)
