"""HTTP surface over the classification service.

POST /classify  {"tweet_id": str}  or  {"payload": {"tweet": {...}, "user": {...}}}
    -> {"tweet_id", "label", "confidence", "model_version", "latency_ms"}
POST /feedback  {"tweet_id": str, "user_label": "fake"|"genuine", "user_id"?: str}
    -> the stored feedback record, including whether an update was applied
GET  /health    -> {"model_version": int, "queue_depth": int}
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from misinfo.service import (
    ClassificationService,
    ServiceValidationError,
    TweetNotFound,
)


class ClassifyRequest(BaseModel):
    tweet_id: Optional[str] = None
    payload: Optional[dict] = None


class FeedbackRequest(BaseModel):
    tweet_id: str
    user_label: str
    user_id: str = "anonymous"


def build_app(service: ClassificationService) -> FastAPI:
    app = FastAPI(title="misinfo classifier")

    @app.post("/classify")
    def classify(request: ClassifyRequest):
        try:
            response = service.classify(tweet_id=request.tweet_id, payload=request.payload)
        except TweetNotFound as exc:
            raise HTTPException(status_code=404, detail=f"tweet not found: {exc}") from exc
        except ServiceValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return response

    @app.post("/feedback")
    def feedback(request: FeedbackRequest):
        try:
            record = service.submit_feedback(
                request.tweet_id, request.user_label, user_id=request.user_id
            )
        except ServiceValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return record

    @app.get("/health")
    def health():
        return service.health()

    return app
