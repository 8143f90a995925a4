"""Domain records shared across the pipeline: tweets, users, support statements, splits."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from typing import Optional

MEDIA_KINDS = ("photo", "video", "gif")


class Label(str, enum.Enum):
    GENUINE = "genuine"
    FAKE = "fake"


# Class order used everywhere a 2-vector of probabilities appears.
# Index 0 = genuine, index 1 = fake; fake is the positive class for metrics.
CLASS_ORDER = (Label.GENUINE, Label.FAKE)


class LabelSource(str, enum.Enum):
    URL_PROPAGATION = "url_propagation"
    ORG_ACCOUNT = "org_account"
    SIMILARITY = "similarity"
    NLI = "nli"
    HUMAN = "human"


@dataclass
class TweetRecord:
    """One social post with optional weak or human label.

    ``label_source`` must be present exactly when ``label`` is; counts are
    non-negative. ``media`` maps each of MEDIA_KINDS to a count.
    """

    tweet_id: str
    text: str
    user_id: str
    created_at: datetime
    hashtags: list[str] = field(default_factory=list)
    urls: list[str] = field(default_factory=list)
    media: dict[str, int] = field(default_factory=dict)
    favourite_count: int = 0
    retweet_count: int = 0
    is_retweet: bool = False
    label: Optional[Label] = None
    label_source: Optional[LabelSource] = None

    def __post_init__(self):
        if not self.tweet_id:
            raise ValueError("tweet_id must be non-empty")
        if (self.label is None) != (self.label_source is None):
            raise ValueError(
                f"tweet {self.tweet_id}: label_source present iff label present"
            )
        if self.favourite_count < 0 or self.retweet_count < 0:
            raise ValueError(f"tweet {self.tweet_id}: counts must be >= 0")
        self.media = {k: int(self.media.get(k, 0)) for k in MEDIA_KINDS}
        if any(v < 0 for v in self.media.values()):
            raise ValueError(f"tweet {self.tweet_id}: media counts must be >= 0")

    @property
    def media_count(self) -> int:
        return sum(self.media.values())

    def with_label(self, label: Label, source: LabelSource) -> "TweetRecord":
        """Return a copy carrying the given label; existing labels are never touched here."""
        out = TweetRecord(**{**asdict_raw(self), "label": label, "label_source": source})
        return out


def asdict_raw(rec: TweetRecord) -> dict:
    """Plain dict of a record's fields without enum/datetime conversion."""
    return {
        "tweet_id": rec.tweet_id,
        "text": rec.text,
        "user_id": rec.user_id,
        "created_at": rec.created_at,
        "hashtags": list(rec.hashtags),
        "urls": list(rec.urls),
        "media": dict(rec.media),
        "favourite_count": rec.favourite_count,
        "retweet_count": rec.retweet_count,
        "is_retweet": rec.is_retweet,
        "label": rec.label,
        "label_source": rec.label_source,
    }


def tweet_to_json(rec: TweetRecord) -> dict:
    d = asdict_raw(rec)
    d["created_at"] = rec.created_at.isoformat()
    d["label"] = rec.label.value if rec.label else None
    d["label_source"] = rec.label_source.value if rec.label_source else None
    return d


def tweet_from_json(d: dict) -> TweetRecord:
    created = d.get("created_at")
    if isinstance(created, str):
        created = datetime.fromisoformat(created)
    elif created is None:
        created = datetime.fromtimestamp(0, tz=timezone.utc)
    label = d.get("label")
    source = d.get("label_source")
    return TweetRecord(
        tweet_id=str(d["tweet_id"]),
        text=d["text"],
        user_id=str(d.get("user_id", "")),
        created_at=created,
        hashtags=list(d.get("hashtags", [])),
        urls=list(d.get("urls", [])),
        media=dict(d.get("media", {})),
        favourite_count=int(d.get("favourite_count", 0)),
        retweet_count=int(d.get("retweet_count", 0)),
        is_retweet=bool(d.get("is_retweet", False)),
        label=Label(label) if label else None,
        label_source=LabelSource(source) if source else None,
    )


@dataclass
class UserRecord:
    """Author metadata; absent fields fall back to neutral defaults downstream."""

    user_id: str
    verified: bool = False
    followers_count: int = 0
    favourites_count: int = 0
    statuses_count: int = 0
    description: str = ""


def user_to_json(u: UserRecord) -> dict:
    return {
        "user_id": u.user_id,
        "verified": u.verified,
        "followers_count": u.followers_count,
        "favourites_count": u.favourites_count,
        "statuses_count": u.statuses_count,
        "description": u.description,
    }


def user_from_json(d: dict) -> UserRecord:
    return UserRecord(
        user_id=str(d["user_id"]),
        verified=bool(d.get("verified", False)),
        followers_count=int(d.get("followers_count", 0)),
        favourites_count=int(d.get("favourites_count", 0)),
        statuses_count=int(d.get("statuses_count", 0)),
        description=d.get("description", ""),
    )


@dataclass
class SupportStatement:
    """A fact-check or health-body statement with a fixed verdict."""

    statement_id: str
    text: str
    verdict: Label
    source: str = ""

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"statement {self.statement_id}: text must be non-empty")
        self.verdict = Label(self.verdict)


@dataclass
class DatasetSplit:
    """Train/test/unlabelled partition. Test records are human-labelled only."""

    train: list[TweetRecord]
    test: list[TweetRecord]
    unlabelled: list[TweetRecord] = field(default_factory=list)

    def __post_init__(self):
        train_ids = {t.tweet_id for t in self.train}
        test_ids = {t.tweet_id for t in self.test}
        overlap = train_ids & test_ids
        if overlap:
            raise ValueError(f"train/test overlap on ids: {sorted(overlap)[:5]}")
        bad = [t.tweet_id for t in self.test if t.label_source is not LabelSource.HUMAN]
        if bad:
            raise ValueError(f"test records must be human-labelled, got: {bad[:5]}")
