"""JSONL ingestion and serialization for tweet and user records.

The on-disk format is one JSON object per line. Malformed lines are collected
into an error report instead of being silently dropped; duplicate tweet_ids
keep the first occurrence and report the rest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from misinfo.records import TweetRecord, UserRecord, tweet_from_json, tweet_to_json, user_from_json, user_to_json


@dataclass
class IngestError:
    line_no: int
    message: str
    raw: str


@dataclass
class IngestResult:
    records: list[TweetRecord] = field(default_factory=list)
    errors: list[IngestError] = field(default_factory=list)


def ingest_tweets(path: str | Path, fmt: str = "jsonl") -> IngestResult:
    """Read tweet records from a JSONL file.

    Missing file is fatal; a malformed line (bad JSON, schema violation,
    duplicate id) becomes an IngestError entry and the line is skipped.
    """
    if fmt != "jsonl":
        raise ValueError(f"unsupported format: {fmt}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)

    result = IngestResult()
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = tweet_from_json(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                result.errors.append(IngestError(line_no, str(exc), line))
                continue
            if rec.tweet_id in seen:
                result.errors.append(
                    IngestError(line_no, f"duplicate tweet_id {rec.tweet_id}", line)
                )
                continue
            seen.add(rec.tweet_id)
            result.records.append(rec)
    return result


def write_tweets_jsonl(records: list[TweetRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(tweet_to_json(rec), ensure_ascii=False) + "\n")
    return path


def ingest_users(path: str | Path) -> dict[str, UserRecord]:
    """Read user records from JSONL, keyed by user_id. Later lines win."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    users: dict[str, UserRecord] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u = user_from_json(json.loads(line))
            users[u.user_id] = u
    return users


def write_users_jsonl(users: list[UserRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for u in users:
            fh.write(json.dumps(user_to_json(u), ensure_ascii=False) + "\n")
    return path
