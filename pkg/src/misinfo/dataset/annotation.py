"""Annotation-task export and inter-annotator agreement.

The export writes a CSV sheet for human annotators: tweet text plus feature
context, with the machine label deliberately withheld so it cannot anchor
the annotator. Agreement over returned sheets is measured with nominal
Krippendorff's alpha.
"""

from __future__ import annotations

import csv
from collections import Counter
from pathlib import Path
from typing import Hashable, Optional, Sequence

from misinfo.records import TweetRecord

ANNOTATION_INSTRUCTIONS = [
    "Label a tweet as FAKE if and only if at least one of the following holds:",
    "  1. It contradicts or undermines facts from a pre-defined list. Note that a "
    "combined list was made from the trusted genuine sources.",
    "  2. It supports or elevates a commonly identified misinformation.",
    "  3. It is written in the form of sarcasm or humour, but promotes a misleading statement.",
    "Other tweets which do not satisfy any of the above would be either unlabelled "
    "or genuine, as per the annotator's discretion.",
    "If the tweet text in itself does not provide enough context to annotate with "
    "confidence, refer to the tweet and user feature columns.",
]

_SHEET_FIELDS = [
    "tweet_id",
    "text",
    "hashtags",
    "urls",
    "media_count",
    "favourite_count",
    "retweet_count",
    "is_retweet",
    "annotator_label",
]


def export_annotation_tasks(tweets: Sequence[TweetRecord], path: str | Path) -> Path:
    """Write the annotation sheet; returns its path.

    The instruction block goes in as comment lines so spreadsheet imports can
    skip them; one row per tweet, ``annotator_label`` left blank.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for line in ANNOTATION_INSTRUCTIONS:
            fh.write(f"# {line}\n")
        writer = csv.DictWriter(fh, fieldnames=_SHEET_FIELDS)
        writer.writeheader()
        for t in tweets:
            writer.writerow(
                {
                    "tweet_id": t.tweet_id,
                    "text": t.text,
                    "hashtags": " ".join(t.hashtags),
                    "urls": " ".join(t.urls),
                    "media_count": t.media_count,
                    "favourite_count": t.favourite_count,
                    "retweet_count": t.retweet_count,
                    "is_retweet": int(t.is_retweet),
                    "annotator_label": "",
                }
            )
    return path


def read_annotation_sheet(path: str | Path) -> dict[str, str]:
    """Read a filled-in sheet back as {tweet_id: annotator_label}; blanks omitted."""
    out: dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        for row in csv.DictReader(rows):
            label = (row.get("annotator_label") or "").strip()
            if label:
                out[row["tweet_id"]] = label
    return out


def krippendorff_alpha(annotations: Sequence[Sequence[Optional[Hashable]]]) -> float:
    """Nominal-scale Krippendorff's alpha for an annotator x item matrix.

    ``annotations[a][i]`` is annotator ``a``'s label for item ``i`` or None
    where missing. Computed from the coincidence matrix: alpha = 1 - Do/De
    with Do the observed and De the expected disagreement. Raises ValueError
    when fewer than two items have at least two annotations (alpha undefined).
    """
    if len(annotations) < 2:
        raise ValueError("need at least 2 annotators")
    n_items = max((len(row) for row in annotations), default=0)

    # Coincidence counts: within each item, every ordered pair of values
    # contributes 1/(m_u - 1), where m_u is that item's annotation count.
    pair_counts: Counter[tuple[Hashable, Hashable]] = Counter()
    value_totals: Counter[Hashable] = Counter()
    n_pairable = 0
    for i in range(n_items):
        values = [row[i] for row in annotations if i < len(row) and row[i] is not None]
        m = len(values)
        if m < 2:
            continue
        n_pairable += m
        weight = 1.0 / (m - 1)
        for a in range(m):
            for b in range(m):
                if a == b:
                    continue
                pair_counts[(values[a], values[b])] += weight  # type: ignore[index]
        for v in values:
            value_totals[v] += 1

    if n_pairable == 0:
        raise ValueError("alpha undefined: no item has two or more annotations")

    observed_disagreement = sum(
        count for (va, vb), count in pair_counts.items() if va != vb
    ) / n_pairable
    expected_disagreement = sum(
        value_totals[va] * value_totals[vb]
        for va in value_totals
        for vb in value_totals
        if va != vb
    ) / (n_pairable * (n_pairable - 1))

    if expected_disagreement == 0.0:
        return 1.0
    return 1.0 - observed_disagreement / expected_disagreement
