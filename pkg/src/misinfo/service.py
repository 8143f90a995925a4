"""Classification service: inference, feedback intake, gated online learning.

Concurrency contract: classify handlers share an immutable published
checkpoint reference and never block on training. Feedback flows through a
queue owned by a single updater thread; each applied update trains one low
learning-rate supervised step on the feedback example, checks a fixed sanity
batch, and atomically publishes a new checkpoint with a bumped version.
An update is enqueued only when the user disagrees with the served label,
the served confidence is below the gate, and it is the first such feedback
for that (tweet, user) pair.
"""

from __future__ import annotations

import copy
import json
import queue
import threading
import time
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Protocol

import torch

from misinfo.model.network import FusionModel, Prediction
from misinfo.prep import FeaturePipeline, PreparedExample, collate, label_index
from misinfo.records import Label, TweetRecord, UserRecord
from misinfo.training import ml_loss


class TweetFetchClient(Protocol):
    """Resolves a tweet id to its record and (optionally) its author."""

    def fetch(self, tweet_id: str) -> tuple[TweetRecord, Optional[UserRecord]]:
        ...


class FixtureTweetClient:
    """In-memory fetch client for tests and offline runs."""

    def __init__(self, tweets: dict[str, TweetRecord],
                 users: Optional[dict[str, UserRecord]] = None):
        self._tweets = tweets
        self._users = users or {}

    def fetch(self, tweet_id: str) -> tuple[TweetRecord, Optional[UserRecord]]:
        if tweet_id not in self._tweets:
            raise KeyError(tweet_id)
        tweet = self._tweets[tweet_id]
        return tweet, self._users.get(tweet.user_id)


class TweetNotFound(KeyError):
    pass


class ServiceValidationError(ValueError):
    pass


@dataclass
class ServiceConfig:
    confidence_gate: float = 0.6
    online_lr: float = 1e-4          # 0.1x the default training rate
    sanity_degradation: float = 0.10  # max tolerated relative loss increase
    adam_beta1: float = 0.90
    adam_beta2: float = 0.98


@dataclass
class ClassifyResponse:
    tweet_id: str
    label: str
    confidence: float
    model_version: int
    latency_ms: float


@dataclass
class FeedbackRecord:
    tweet_id: str
    served_label: str
    served_confidence: float
    user_label: str
    user_id: str
    timestamp: str
    applied_update: bool


@dataclass
class _Published:
    model: FusionModel
    version: int


class ClassificationService:
    def __init__(
        self,
        model: FusionModel,
        pipeline: FeaturePipeline,
        tweet_client: Optional[TweetFetchClient] = None,
        sanity_examples: Optional[list[PreparedExample]] = None,
        feedback_log: Optional[str | Path] = None,
        config: Optional[ServiceConfig] = None,
        model_version: int = 1,
    ):
        config = config or ServiceConfig()
        model.eval()
        self._published = _Published(model=model, version=model_version)
        self._pipeline = pipeline
        self._client = tweet_client
        self._config = config
        self._sanity_batch = (
            collate(sanity_examples, require_labels=True) if sanity_examples else None
        )
        self._feedback_log = Path(feedback_log) if feedback_log else None

        self._served: dict[str, ClassifyResponse] = {}
        self._served_examples: dict[str, PreparedExample] = {}
        self._update_seen: set[tuple[str, str]] = set()
        self._state_lock = threading.Lock()

        self._queue: "queue.Queue[Optional[tuple[PreparedExample, int]]]" = queue.Queue()
        self._closed = False
        self._updater = threading.Thread(target=self._update_loop, daemon=True)
        self._updater.start()

    # ------------------------------------------------------------------ serve
    def classify(
        self,
        tweet_id: Optional[str] = None,
        payload: Optional[dict] = None,
    ) -> ClassifyResponse:
        """Run the full pipeline for one tweet; never blocks on training."""
        started = time.perf_counter()
        tweet, user = self._resolve(tweet_id, payload)
        example = self._pipeline.prepare(tweet, user)
        published = self._published  # atomic snapshot of (model, version)
        batch = collate([example])
        prediction: Prediction = published.model.predict(batch)[0]
        response = ClassifyResponse(
            tweet_id=tweet.tweet_id,
            label=prediction.label.value,
            confidence=prediction.confidence,
            model_version=published.version,
            latency_ms=(time.perf_counter() - started) * 1000.0,
        )
        with self._state_lock:
            self._served[tweet.tweet_id] = response
            self._served_examples[tweet.tweet_id] = example
        return response

    def _resolve(
        self, tweet_id: Optional[str], payload: Optional[dict]
    ) -> tuple[TweetRecord, Optional[UserRecord]]:
        from misinfo.records import tweet_from_json, user_from_json

        if payload is not None:
            try:
                tweet = tweet_from_json(payload["tweet"])
                user = user_from_json(payload["user"]) if payload.get("user") else None
            except (KeyError, ValueError, TypeError) as exc:
                raise ServiceValidationError(f"malformed payload: {exc}") from exc
            return tweet, user
        if tweet_id is None:
            raise ServiceValidationError("request needs tweet_id or an inline payload")
        if self._client is None:
            raise ServiceValidationError("no tweet-fetch client configured")
        try:
            return self._client.fetch(tweet_id)
        except KeyError as exc:
            raise TweetNotFound(tweet_id) from exc

    # -------------------------------------------------------------- feedback
    def submit_feedback(
        self, tweet_id: str, user_label: str, user_id: str = "anonymous"
    ) -> FeedbackRecord:
        """Record feedback; gate and deduplicate online updates."""
        try:
            label = Label(user_label)
        except ValueError as exc:
            raise ServiceValidationError(f"unknown label {user_label!r}") from exc
        with self._state_lock:
            served = self._served.get(tweet_id)
            if served is None:
                raise ServiceValidationError(
                    f"tweet {tweet_id} has no served classification on record"
                )
            disagreement = label.value != served.label
            gated = served.confidence < self._config.confidence_gate
            first = (tweet_id, user_id) not in self._update_seen
            applied = disagreement and gated and first
            if applied:
                self._update_seen.add((tweet_id, user_id))
                example = self._served_examples[tweet_id]
                corrected = PreparedExample(
                    tweet_id=example.tweet_id,
                    token_ids=example.token_ids,
                    ek=example.ek,
                    tweet_features=example.tweet_features,
                    user_features=example.user_features,
                    label=label_index(label),
                )
                self._queue.put((corrected, self._published.version))

        record = FeedbackRecord(
            tweet_id=tweet_id,
            served_label=served.label,
            served_confidence=served.confidence,
            user_label=label.value,
            user_id=user_id,
            timestamp=datetime.now(timezone.utc).isoformat(),
            applied_update=applied,
        )
        self._append_log(record)
        return record

    def _append_log(self, record: FeedbackRecord) -> None:
        if self._feedback_log is None:
            return
        with self._state_lock:
            with self._feedback_log.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(asdict(record)) + "\n")

    # ---------------------------------------------------------------- update
    def _update_loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:  # sentinel from close()
                self._queue.task_done()
                return
            example, _ = item
            try:
                self._apply_update(example)
            finally:
                self._queue.task_done()

    def _apply_update(self, example: PreparedExample) -> None:
        """One low-rate supervised step on a copied model; publish if sane."""
        current = self._published
        candidate = copy.deepcopy(current.model)
        candidate.train()
        optimizer = torch.optim.Adam(
            candidate.parameters(),
            lr=self._config.online_lr,
            betas=(self._config.adam_beta1, self._config.adam_beta2),
        )
        batch = collate([example], require_labels=True)

        if self._sanity_batch is not None:
            with torch.no_grad():
                pre = float(ml_loss(current.model, self._sanity_batch))
        loss = ml_loss(candidate, batch)
        if not torch.isfinite(loss):
            return  # discard, model unchanged
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        candidate.eval()

        if self._sanity_batch is not None:
            with torch.no_grad():
                post = float(ml_loss(candidate, self._sanity_batch))
            if not (post == post) or post > pre * (1.0 + self._config.sanity_degradation):
                return  # degradation guard: skip publish, keep old model
        self._published = _Published(model=candidate, version=current.version + 1)

    # ----------------------------------------------------------------- admin
    @property
    def model_version(self) -> int:
        return self._published.version

    def health(self) -> dict:
        return {
            "model_version": self._published.version,
            "queue_depth": self._queue.qsize(),
        }

    def drain(self) -> None:
        """Block until all enqueued updates have been processed."""
        self._queue.join()

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._queue.put(None)
            self._updater.join(timeout=10)
