"""Stratified train/test splitting.

Test records come exclusively from the human-labelled subset; machine labels
stay in train only. The test set is sized as a fraction of the human pool and
stratified to the class ratio of the full labelled pool, so both partitions
track the overall class balance.
"""

from __future__ import annotations

import numpy as np

from misinfo.records import DatasetSplit, Label, LabelSource, TweetRecord


def split_train_test(
    labelled: list[TweetRecord],
    test_fraction: float = 0.2,
    seed: int = 0,
    unlabelled: list[TweetRecord] | None = None,
) -> DatasetSplit:
    """Deterministic stratified split.

    Raises ValueError when the human-labelled pool cannot supply the
    stratified test set, stating how many records per class are required.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    unlabelled_pool = [t for t in (unlabelled or []) if t.label is None]
    bad = [t.tweet_id for t in labelled if t.label is None]
    if bad:
        raise ValueError(f"unlabelled records in labelled pool: {bad[:5]}")

    human = [t for t in labelled if t.label_source is LabelSource.HUMAN]
    if not human:
        raise ValueError("no human-labelled records; test set requires them")

    pool_size = len(labelled)
    pool_fake = sum(1 for t in labelled if t.label is Label.FAKE)
    test_size = round(test_fraction * len(human))
    if test_size < 1:
        required = int(np.ceil(1 / test_fraction))
        raise ValueError(
            f"insufficient human-labelled records: have {len(human)}, "
            f"need at least {required} for test_fraction={test_fraction}"
        )

    # Per-class test quota follows the FULL labelled pool's class ratio.
    quota = {Label.FAKE: round(test_size * pool_fake / pool_size)}
    quota[Label.GENUINE] = test_size - quota[Label.FAKE]

    rng = np.random.default_rng(seed)
    test_ids: set[str] = set()
    for cls, n_cls in quota.items():
        members = sorted(
            (t.tweet_id for t in human if t.label is cls)
        )  # sort before shuffling so input order cannot leak into the draw
        if len(members) < n_cls:
            raise ValueError(
                f"insufficient human-labelled {cls.value} records: "
                f"have {len(members)}, need {n_cls}"
            )
        picked = rng.permutation(len(members))[:n_cls]
        test_ids.update(members[i] for i in picked)

    test = [t for t in human if t.tweet_id in test_ids]
    train = [t for t in labelled if t.tweet_id not in test_ids]
    split = DatasetSplit(train=train, test=test, unlabelled=unlabelled_pool)
    _check_stratification(labelled, split)
    return split


def _check_stratification(labelled: list[TweetRecord], split: DatasetSplit) -> None:
    """Enforce the 1-percentage-point stratification contract."""
    def fake_ratio(records: list[TweetRecord]) -> float:
        return sum(1 for t in records if t.label is Label.FAKE) / len(records)

    pool = fake_ratio(labelled)
    for name, part in (("train", split.train), ("test", split.test)):
        drift = abs(fake_ratio(part) - pool)
        if drift > 0.01 + 1e-12:
            raise ValueError(
                f"{name} class ratio drifts {drift:.4f} from pool; stratification failed"
            )
