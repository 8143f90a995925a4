"""Bridges records to model tensors: tokenize, featurize, normalize, collate.

A FeaturePipeline bundles everything an example needs on its way into the
network (vocabulary, fitted normalizers, domain table, support-knowledge
provider) so training and serving share one preparation path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import torch

from misinfo.features import (
    DomainScoreTable,
    Normalizer,
    extract_tweet_features,
    extract_user_features,
    fit_normalizer,
)
from misinfo.model.network import Batch
from misinfo.model.vocab import PAD_ID, Vocabulary, build_vocab
from misinfo.records import CLASS_ORDER, Label, TweetRecord, UserRecord

FAKE_INDEX = CLASS_ORDER.index(Label.FAKE)


def label_index(label: Label) -> int:
    return CLASS_ORDER.index(label)


@dataclass
class PreparedExample:
    tweet_id: str
    token_ids: list[int]
    ek: np.ndarray
    tweet_features: np.ndarray
    user_features: np.ndarray
    label: Optional[int] = None


@dataclass
class FeaturePipeline:
    vocab: Vocabulary
    tf_normalizer: Normalizer
    uf_normalizer: Normalizer
    domain_table: DomainScoreTable = field(default_factory=DomainScoreTable)
    ek_dim: int = 8
    ek_provider: Optional[Callable[[TweetRecord], np.ndarray]] = None
    max_len: int = 128

    def prepare(
        self,
        tweet: TweetRecord,
        user: Optional[UserRecord] = None,
        recent_tweets: Sequence = (),
    ) -> PreparedExample:
        token_ids = self.vocab.encode(tweet.text, max_len=self.max_len)
        if not token_ids:
            token_ids = [PAD_ID]  # encoder requires at least one step
        if self.ek_provider is not None:
            ek = np.asarray(self.ek_provider(tweet), dtype=np.float64)
            if ek.shape != (self.ek_dim,):
                raise ValueError(f"ek provider returned shape {ek.shape}, want ({self.ek_dim},)")
        else:
            ek = np.zeros(self.ek_dim)
        tf = self.tf_normalizer.apply(extract_tweet_features(tweet, self.domain_table))
        uf = self.uf_normalizer.apply(extract_user_features(user, recent_tweets))
        label = label_index(tweet.label) if tweet.label is not None else None
        return PreparedExample(tweet.tweet_id, token_ids, ek, tf, uf, label)

    @classmethod
    def fit(
        cls,
        train_tweets: Sequence[TweetRecord],
        users: Optional[dict[str, UserRecord]] = None,
        domain_table: Optional[DomainScoreTable] = None,
        vocab: Optional[Vocabulary] = None,
        vocab_size: int = 20000,
        ek_dim: int = 8,
        ek_provider: Optional[Callable[[TweetRecord], np.ndarray]] = None,
        max_len: int = 128,
    ) -> "FeaturePipeline":
        """Build vocabulary and fit normalizers on the training split only."""
        if not train_tweets:
            raise ValueError("cannot fit a pipeline on an empty training split")
        users = users or {}
        table = domain_table or DomainScoreTable()
        if vocab is None:
            vocab = build_vocab((t.text for t in train_tweets), max_size=vocab_size)
        tf_rows = np.stack([extract_tweet_features(t, table) for t in train_tweets])
        uf_rows = np.stack(
            [extract_user_features(users.get(t.user_id)) for t in train_tweets]
        )
        return cls(
            vocab=vocab,
            tf_normalizer=fit_normalizer(tf_rows),
            uf_normalizer=fit_normalizer(uf_rows),
            domain_table=table,
            ek_dim=ek_dim,
            ek_provider=ek_provider,
            max_len=max_len,
        )


def collate(
    examples: Sequence[PreparedExample],
    dtype: torch.dtype = torch.float32,
    require_labels: bool = False,
) -> Batch:
    """Pad token sequences and stack features into one Batch."""
    if not examples:
        raise ValueError("cannot collate an empty example list")
    max_len = max(len(e.token_ids) for e in examples)
    ids = torch.full((len(examples), max_len), PAD_ID, dtype=torch.long)
    lengths = torch.empty(len(examples), dtype=torch.long)
    for i, ex in enumerate(examples):
        ids[i, : len(ex.token_ids)] = torch.tensor(ex.token_ids, dtype=torch.long)
        lengths[i] = max(1, len(ex.token_ids))

    has_labels = all(e.label is not None for e in examples)
    if require_labels and not has_labels:
        missing = [e.tweet_id for e in examples if e.label is None][:5]
        raise ValueError(f"labels required but missing for: {missing}")
    labels = (
        torch.tensor([e.label for e in examples], dtype=torch.long) if has_labels else None
    )
    return Batch(
        token_ids=ids,
        lengths=lengths,
        ek=torch.tensor(np.stack([e.ek for e in examples]), dtype=dtype),
        tweet_features=torch.tensor(
            np.stack([e.tweet_features for e in examples]), dtype=dtype
        ),
        user_features=torch.tensor(
            np.stack([e.user_features for e in examples]), dtype=dtype
        ),
        labels=labels,
    )
