"""Shared test fixtures and factories."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
import torch

from misinfo.model.network import Batch, FusionModel, NetworkConfig
from misinfo.records import Label, LabelSource, TweetRecord, UserRecord

EPOCH = datetime(2020, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def make_tweet(tweet_id="t1", text="hello world", user_id="u1", minutes=0,
               hashtags=(), urls=(), media=None, favourite_count=0,
               retweet_count=0, is_retweet=False, label=None, label_source=None):
    if label is not None and label_source is None:
        label_source = LabelSource.HUMAN
    return TweetRecord(
        tweet_id=tweet_id,
        text=text,
        user_id=user_id,
        created_at=EPOCH + timedelta(minutes=minutes),
        hashtags=list(hashtags),
        urls=list(urls),
        media=dict(media or {}),
        favourite_count=favourite_count,
        retweet_count=retweet_count,
        is_retweet=is_retweet,
        label=label,
        label_source=label_source,
    )


def make_user(user_id="u1", verified=False, followers=10, favourites=5,
              statuses=20, description=""):
    return UserRecord(
        user_id=user_id,
        verified=verified,
        followers_count=followers,
        favourites_count=favourites,
        statuses_count=statuses,
        description=description,
    )


def tiny_network_config(**overrides) -> NetworkConfig:
    base = dict(
        embed_dim=4, hidden_size=3, ek_width=4, head_width=4,
        tweet_widths=(4, 4), user_widths=(4, 4, 4), dropout=0.3,
    )
    base.update(overrides)
    return NetworkConfig(**base)


def tiny_model(vocab_size=12, ek_dim=3, tf_dim=5, uf_dim=4, seed=0,
               dtype=torch.float32, **config_overrides) -> FusionModel:
    torch.manual_seed(seed)
    model = FusionModel(
        vocab_size=vocab_size, ek_dim=ek_dim, tweet_feature_dim=tf_dim,
        user_feature_dim=uf_dim, config=tiny_network_config(**config_overrides),
    )
    if dtype == torch.float64:
        model.double()
    return model


def random_batch(model: FusionModel, batch_size=3, max_len=4, seed=0,
                 dtype=torch.float32, labelled=True, full_length=False) -> Batch:
    g = torch.Generator().manual_seed(seed)
    vocab_size = model.dims["vocab_size"]
    if full_length:
        lengths = torch.full((batch_size,), max_len, dtype=torch.long)
    else:
        lengths = torch.randint(1, max_len + 1, (batch_size,), generator=g)
    n = int(lengths.max())
    ids = torch.zeros((batch_size, n), dtype=torch.long)
    for i, ln in enumerate(lengths):
        ids[i, :ln] = torch.randint(2, vocab_size, (int(ln),), generator=g)
    return Batch(
        token_ids=ids,
        lengths=lengths,
        ek=torch.randn(batch_size, model.dims["ek_dim"], generator=g, dtype=dtype),
        tweet_features=torch.randn(batch_size, model.dims["tweet_feature_dim"],
                                   generator=g, dtype=dtype),
        user_features=torch.randn(batch_size, model.dims["user_feature_dim"],
                                  generator=g, dtype=dtype),
        labels=torch.randint(0, 2, (batch_size,), generator=g) if labelled else None,
    )


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)
