"""Per-class dataset statistics: hashtags, URLs, media, sentiment, engagement.

Emits a machine-readable report (JSON) and, when an output directory is
given, a small set of plots mirroring the report tables.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from misinfo.features import sentiment
from misinfo.records import MEDIA_KINDS, Label, TweetRecord

SENTIMENT_BINS = np.linspace(-1.0, 1.0, 9)  # 8 histogram buckets over [-1, 1]


@dataclass
class ClassStats:
    n_tweets: int = 0
    hashtag_counts: dict[str, int] = field(default_factory=dict)
    urls_per_tweet: float = 0.0
    media_counts: dict[str, int] = field(default_factory=lambda: {k: 0 for k in MEDIA_KINDS})
    sentiment_histogram: list[int] = field(default_factory=lambda: [0] * (len(SENTIMENT_BINS) - 1))
    favourites: dict[str, float] = field(default_factory=dict)
    retweets: dict[str, float] = field(default_factory=dict)
    retweet_share: float = 0.0


@dataclass
class StatsReport:
    per_class: dict[str, ClassStats] = field(default_factory=dict)
    n_unlabelled: int = 0

    def to_json(self) -> dict:
        return {
            "per_class": {
                cls: {
                    "n_tweets": s.n_tweets,
                    "hashtag_counts": s.hashtag_counts,
                    "urls_per_tweet": s.urls_per_tweet,
                    "media_counts": s.media_counts,
                    "sentiment_histogram": s.sentiment_histogram,
                    "favourites": s.favourites,
                    "retweets": s.retweets,
                    "retweet_share": s.retweet_share,
                }
                for cls, s in self.per_class.items()
            },
            "n_unlabelled": self.n_unlabelled,
        }


def _summary(values: Sequence[int]) -> dict[str, float]:
    if not values:
        return {"mean": 0.0, "median": 0.0, "max": 0.0}
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "median": float(np.median(arr)), "max": float(arr.max())}


def dataset_stats(
    tweets: Sequence[TweetRecord], out_dir: Optional[str | Path] = None
) -> StatsReport:
    """Tally per-class statistics; optionally write report.json and plots."""
    report = StatsReport()
    report.n_unlabelled = sum(1 for t in tweets if t.label is None)
    for cls in (Label.GENUINE, Label.FAKE):
        members = [t for t in tweets if t.label is cls]
        stats = ClassStats(n_tweets=len(members))
        if members:
            tags = Counter(tag.lower() for t in members for tag in t.hashtags)
            stats.hashtag_counts = dict(tags.most_common())
            stats.urls_per_tweet = sum(len(t.urls) for t in members) / len(members)
            for kind in MEDIA_KINDS:
                stats.media_counts[kind] = sum(t.media.get(kind, 0) for t in members)
            polarity = [sentiment(t.text) for t in members]
            hist, _ = np.histogram(polarity, bins=SENTIMENT_BINS)
            stats.sentiment_histogram = hist.tolist()
            stats.favourites = _summary([t.favourite_count for t in members])
            stats.retweets = _summary([t.retweet_count for t in members])
            stats.retweet_share = sum(1 for t in members if t.is_retweet) / len(members)
        report.per_class[cls.value] = stats

    if out_dir is not None:
        _write_report(report, Path(out_dir))
    return report


def _write_report(report: StatsReport, out_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report.to_json(), indent=2))

    fig, axes = plt.subplots(1, 3, figsize=(15, 4))
    centers = (SENTIMENT_BINS[:-1] + SENTIMENT_BINS[1:]) / 2
    width = (SENTIMENT_BINS[1] - SENTIMENT_BINS[0]) * 0.4
    for offset, (cls, stats) in enumerate(report.per_class.items()):
        axes[0].bar(centers + (offset - 0.5) * width, stats.sentiment_histogram,
                    width=width, label=cls)
        top = Counter(stats.hashtag_counts).most_common(8)
        if top:
            names, counts = zip(*top)
            axes[1].barh([f"{cls}:{n}" for n in names], counts, label=cls)
        axes[2].bar([f"{cls}\nfav", f"{cls}\nrt"],
                    [stats.favourites.get("mean", 0.0), stats.retweets.get("mean", 0.0)])
    axes[0].set_title("sentiment histogram")
    axes[0].legend()
    axes[1].set_title("top hashtags")
    axes[2].set_title("mean engagement")
    fig.tight_layout()
    fig.savefig(out_dir / "stats.png", dpi=100)
    plt.close(fig)
