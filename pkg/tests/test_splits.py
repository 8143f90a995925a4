"""Stratified splitting: quotas, determinism, human-only test sets."""

import pytest

from misinfo.dataset import split_train_test
from misinfo.records import Label, LabelSource

from conftest import make_tweet


def human_pool(n_fake, n_genuine, start=0):
    tweets = []
    for i in range(n_fake):
        tweets.append(make_tweet(tweet_id=f"f{start + i}", label=Label.FAKE,
                                 label_source=LabelSource.HUMAN))
    for i in range(n_genuine):
        tweets.append(make_tweet(tweet_id=f"g{start + i}", label=Label.GENUINE,
                                 label_source=LabelSource.HUMAN))
    return tweets


def test_exact_stratification_arithmetic():
    # 100 human records at 60 fake / 40 genuine, fraction 0.2:
    # test size = 20, fake quota = round(20 * 0.6) = 12, genuine = 8.
    pool = human_pool(60, 40)
    split = split_train_test(pool, test_fraction=0.2, seed=3)
    assert len(split.test) == 20
    assert sum(1 for t in split.test if t.label is Label.FAKE) == 12
    assert sum(1 for t in split.test if t.label is Label.GENUINE) == 8
    assert len(split.train) == 80


def test_same_seed_identical_split():
    pool = human_pool(60, 40)
    a = split_train_test(pool, test_fraction=0.2, seed=11)
    b = split_train_test(pool, test_fraction=0.2, seed=11)
    assert [t.tweet_id for t in a.test] == [t.tweet_id for t in b.test]
    assert [t.tweet_id for t in a.train] == [t.tweet_id for t in b.train]


def test_different_seed_differs():
    pool = human_pool(60, 40)
    a = split_train_test(pool, test_fraction=0.2, seed=1)
    b = split_train_test(pool, test_fraction=0.2, seed=2)
    assert {t.tweet_id for t in a.test} != {t.tweet_id for t in b.test}


def test_machine_labels_stay_in_train():
    pool = human_pool(50, 50)
    machine = [
        make_tweet(tweet_id=f"m{i}", label=Label.FAKE,
                   label_source=LabelSource.SIMILARITY)
        for i in range(20)
    ] + [
        make_tweet(tweet_id=f"n{i}", label=Label.GENUINE,
                   label_source=LabelSource.NLI)
        for i in range(20)
    ]
    split = split_train_test(pool + machine, test_fraction=0.2, seed=0)
    assert all(t.label_source is LabelSource.HUMAN for t in split.test)
    machine_ids = {t.tweet_id for t in machine}
    assert machine_ids <= {t.tweet_id for t in split.train}


def test_stratification_within_one_point():
    pool = human_pool(600, 400)
    split = split_train_test(pool, test_fraction=0.2, seed=5)

    def fake_ratio(records):
        return sum(1 for t in records if t.label is Label.FAKE) / len(records)

    overall = fake_ratio(pool)
    assert abs(fake_ratio(split.train) - overall) <= 0.01
    assert abs(fake_ratio(split.test) - overall) <= 0.01


def test_no_human_records_is_fatal():
    machine = [make_tweet(tweet_id=f"m{i}", label=Label.FAKE,
                          label_source=LabelSource.NLI) for i in range(10)]
    with pytest.raises(ValueError, match="human"):
        split_train_test(machine, test_fraction=0.2, seed=0)


def test_insufficient_class_members_is_fatal():
    # Pool is 50% fake overall but humans are all genuine; the fake quota
    # cannot be satisfied from the human pool.
    humans = human_pool(0, 10)
    machine = [make_tweet(tweet_id=f"m{i}", label=Label.FAKE,
                          label_source=LabelSource.SIMILARITY) for i in range(10)]
    with pytest.raises(ValueError, match="insufficient"):
        split_train_test(humans + machine, test_fraction=0.2, seed=0)


def test_unlabelled_pool_carried_through():
    pool = human_pool(30, 30)
    unlabelled = [make_tweet(tweet_id=f"u{i}") for i in range(7)]
    split = split_train_test(pool, test_fraction=0.2, seed=0, unlabelled=unlabelled)
    assert len(split.unlabelled) == 7


def test_unlabelled_record_in_labelled_pool_rejected():
    pool = human_pool(5, 5) + [make_tweet(tweet_id="u0")]
    with pytest.raises(ValueError):
        split_train_test(pool, test_fraction=0.2, seed=0)
