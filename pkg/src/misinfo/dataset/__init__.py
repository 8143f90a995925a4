"""Dataset pipeline: ingestion, weak labelling, annotation export, splits, stats."""

from misinfo.dataset.ingest import IngestError, IngestResult, ingest_tweets, ingest_users, write_tweets_jsonl
from misinfo.dataset.labelling import (
    StageReport,
    label_by_nli,
    label_by_org_accounts,
    label_by_similarity,
    label_by_url_propagation,
    normalize_url,
)
from misinfo.dataset.annotation import (
    export_annotation_tasks,
    krippendorff_alpha,
    read_annotation_sheet,
)
from misinfo.dataset.splits import split_train_test
from misinfo.dataset.stats import StatsReport, dataset_stats

__all__ = [
    "IngestError",
    "IngestResult",
    "ingest_tweets",
    "ingest_users",
    "write_tweets_jsonl",
    "StageReport",
    "label_by_url_propagation",
    "label_by_org_accounts",
    "label_by_similarity",
    "label_by_nli",
    "normalize_url",
    "export_annotation_tasks",
    "read_annotation_sheet",
    "krippendorff_alpha",
    "split_train_test",
    "StatsReport",
    "dataset_stats",
]
