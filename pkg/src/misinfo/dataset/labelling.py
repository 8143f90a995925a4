"""Weak-labelling stages: URL propagation, org accounts, similarity, NLI.

Every stage is a pure function returning new records plus a StageReport.
Records that already carry a label are never overwritten, which makes each
stage idempotent and makes the composition order an explicit choice of the
caller (recommended priority: url, org, similarity, nli).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from misinfo.embeddings import SentenceEncoder, cosine_similarity
from misinfo.records import Label, LabelSource, SupportStatement, TweetRecord

# Query parameters that identify campaigns rather than content.
TRACKING_PARAMS = re.compile(r"^(utm_\w+|fbclid|gclid|igshid|mc_cid|mc_eid|ref_src|ref_url|s|t)$")

NLI_ENTAIL = "entail"
NLI_NEUTRAL = "neutral"
NLI_CONTRADICT = "contradict"

# (nli outcome, statement verdict) -> inferred tweet label; neutral abstains.
NLI_DECISION_TABLE: dict[tuple[str, Label], Label] = {
    (NLI_ENTAIL, Label.FAKE): Label.FAKE,
    (NLI_CONTRADICT, Label.GENUINE): Label.FAKE,
    (NLI_ENTAIL, Label.GENUINE): Label.GENUINE,
    (NLI_CONTRADICT, Label.FAKE): Label.GENUINE,
}


@dataclass
class StageReport:
    """What a labelling stage did: counts, conflicts, and skipped records."""

    stage: str
    labelled: int = 0
    conflicts: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)


def normalize_url(url: str) -> str:
    """Lowercase the host, drop fragments and tracking query parameters."""
    parts = urlsplit(url.strip())
    host = parts.netloc.lower()
    query = [(k, v) for k, v in parse_qsl(parts.query, keep_blank_values=True)
             if not TRACKING_PARAMS.match(k)]
    path = parts.path.rstrip("/") or "/"
    return urlunsplit((parts.scheme.lower(), host, path, urlencode(query), ""))


def label_by_url_propagation(
    tweets: list[TweetRecord], url_verdicts: dict[str, Label]
) -> tuple[list[TweetRecord], StageReport]:
    """Propagate a URL's verdict to unlabelled tweets that carry it.

    A tweet whose URLs map to conflicting verdicts stays unlabelled and is
    flagged in the report. ``url_verdicts`` keys must already be normalized.
    """
    report = StageReport(stage="url_propagation")
    out = []
    for tweet in tweets:
        if tweet.label is not None:
            out.append(tweet)
            continue
        verdicts = {
            url_verdicts[normalize_url(u)]
            for u in tweet.urls
            if normalize_url(u) in url_verdicts
        }
        if len(verdicts) == 1:
            out.append(tweet.with_label(verdicts.pop(), LabelSource.URL_PROPAGATION))
            report.labelled += 1
        elif len(verdicts) > 1:
            report.conflicts.append(tweet.tweet_id)
            out.append(tweet)
        else:
            out.append(tweet)
    return out, report


def label_by_org_accounts(
    tweets: list[TweetRecord], org_user_ids: Iterable[str]
) -> tuple[list[TweetRecord], StageReport]:
    """Mark unlabelled tweets posted by trusted organisation accounts as genuine."""
    org_ids = set(org_user_ids)
    report = StageReport(stage="org_account")
    out = []
    for tweet in tweets:
        if tweet.label is None and tweet.user_id in org_ids:
            out.append(tweet.with_label(Label.GENUINE, LabelSource.ORG_ACCOUNT))
            report.labelled += 1
        else:
            out.append(tweet)
    return out, report


def label_by_similarity(
    tweets: list[TweetRecord],
    statements: list[SupportStatement],
    encoder: SentenceEncoder,
    threshold: float = 0.9,
) -> tuple[list[TweetRecord], StageReport]:
    """Inherit the verdict of the most-similar statement when cosine >= threshold.

    Similarity is cosine over the configured sentence encoder. A tweet whose
    embedding fails is skipped (recorded in the report), not dropped.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    report = StageReport(stage="similarity")
    if not statements:
        return list(tweets), report

    stmt_vecs = encoder.encode([s.text for s in statements])
    out = []
    for tweet in tweets:
        if tweet.label is not None:
            out.append(tweet)
            continue
        try:
            vec = encoder.encode([tweet.text])[0]
        except Exception as exc:  # noqa: BLE001 - encoder failures are data, not bugs
            report.skipped.append((tweet.tweet_id, str(exc)))
            out.append(tweet)
            continue
        sims = [cosine_similarity(vec, sv) for sv in stmt_vecs]
        best = max(range(len(sims)), key=lambda i: sims[i])
        if sims[best] >= threshold:
            out.append(tweet.with_label(statements[best].verdict, LabelSource.SIMILARITY))
            report.labelled += 1
        else:
            out.append(tweet)
    return out, report


def label_by_nli(
    tweets: list[TweetRecord],
    statements: list[SupportStatement],
    nli: Callable[[str, str], str],
) -> tuple[list[TweetRecord], StageReport]:
    """Label tweets from (tweet, statement) inference outcomes.

    ``nli(premise, hypothesis)`` is called with the tweet text as premise and
    the statement text as hypothesis and must return one of
    {entail, neutral, contradict}. Per-pair outcomes map through
    NLI_DECISION_TABLE; if the non-neutral pairs disagree about the label the
    tweet is flagged and left unlabelled.
    """
    report = StageReport(stage="nli")
    out = []
    for tweet in tweets:
        if tweet.label is not None:
            out.append(tweet)
            continue
        votes: set[Label] = set()
        failed = False
        for stmt in statements:
            try:
                outcome = nli(tweet.text, stmt.text)
            except Exception as exc:  # noqa: BLE001
                report.skipped.append((tweet.tweet_id, str(exc)))
                failed = True
                break
            if outcome not in (NLI_ENTAIL, NLI_NEUTRAL, NLI_CONTRADICT):
                raise ValueError(f"nli returned unknown outcome: {outcome!r}")
            inferred = NLI_DECISION_TABLE.get((outcome, stmt.verdict))
            if inferred is not None:
                votes.add(inferred)
        if failed:
            out.append(tweet)
            continue
        if len(votes) == 1:
            out.append(tweet.with_label(votes.pop(), LabelSource.NLI))
            report.labelled += 1
        elif len(votes) > 1:
            report.conflicts.append(tweet.tweet_id)
            out.append(tweet)
        else:
            out.append(tweet)
    return out, report
