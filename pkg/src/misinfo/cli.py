"""Command-line entry points for the pipeline, training, evaluation and serving."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import click

from misinfo.records import Label, SupportStatement


@click.group()
def main():
    """Weak-label pipeline, fusion-network training, evaluation, serving."""


@main.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--errors-out", type=click.Path(), default=None,
              help="Where to write the error report (JSON).")
def ingest(path, errors_out):
    """Parse a tweets JSONL file and report document and error counts."""
    from misinfo.dataset import ingest_tweets

    result = ingest_tweets(path)
    click.echo(f"records: {len(result.records)}  errors: {len(result.errors)}")
    if errors_out:
        Path(errors_out).write_text(json.dumps(
            [{"line": e.line_no, "message": e.message} for e in result.errors], indent=2
        ))


@main.command()
@click.option("--stage", type=click.Choice(["url", "sim", "nli"]), required=True)
@click.option("--tweets", "tweets_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--url-verdicts", type=click.Path(exists=True),
              help="JSON map of normalized url -> fake|genuine (stage url).")
@click.option("--statements", type=click.Path(exists=True),
              help="JSONL of support statements (stages sim and nli).")
@click.option("--threshold", type=float, default=0.9, show_default=True)
def label(stage, tweets_path, out_path, url_verdicts, statements, threshold):
    """Run one weak-labelling stage over a tweets file."""
    from misinfo.dataset import (
        ingest_tweets, label_by_nli, label_by_similarity,
        label_by_url_propagation, write_tweets_jsonl,
    )
    from misinfo.embeddings import HashingSentenceEncoder

    tweets = ingest_tweets(tweets_path).records
    if stage == "url":
        if not url_verdicts:
            raise click.UsageError("--url-verdicts required for stage url")
        verdicts = {
            url: Label(v) for url, v in json.loads(Path(url_verdicts).read_text()).items()
        }
        labelled, report = label_by_url_propagation(tweets, verdicts)
    else:
        if not statements:
            raise click.UsageError("--statements required for stages sim/nli")
        stmts = []
        with Path(statements).open() as fh:
            for line in fh:
                if line.strip():
                    d = json.loads(line)
                    stmts.append(SupportStatement(
                        statement_id=str(d["statement_id"]), text=d["text"],
                        verdict=Label(d["verdict"]), source=d.get("source", ""),
                    ))
        if stage == "sim":
            labelled, report = label_by_similarity(
                tweets, stmts, HashingSentenceEncoder(), threshold=threshold
            )
        else:
            raise click.UsageError(
                "stage nli needs a configured inference function; use the library API"
            )
    write_tweets_jsonl(labelled, out_path)
    click.echo(f"stage={report.stage} labelled={report.labelled} "
               f"conflicts={len(report.conflicts)} skipped={len(report.skipped)}")


@main.command()
@click.option("--tweets", "tweets_path", type=click.Path(exists=True), required=True)
@click.option("--test-fraction", type=float, default=0.2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
def split(tweets_path, test_fraction, seed, out_dir):
    """Stratified train/test split; writes train.jsonl and test.jsonl."""
    from misinfo.dataset import ingest_tweets, split_train_test, write_tweets_jsonl

    records = ingest_tweets(tweets_path).records
    labelled = [t for t in records if t.label is not None]
    unlabelled = [t for t in records if t.label is None]
    result = split_train_test(labelled, test_fraction=test_fraction, seed=seed,
                              unlabelled=unlabelled)
    out = Path(out_dir)
    write_tweets_jsonl(result.train, out / "train.jsonl")
    write_tweets_jsonl(result.test, out / "test.jsonl")
    if result.unlabelled:
        write_tweets_jsonl(result.unlabelled, out / "unlabelled.jsonl")
    click.echo(f"train={len(result.train)} test={len(result.test)} "
               f"unlabelled={len(result.unlabelled)}")


@main.command()
@click.option("--tweets", "tweets_path", type=click.Path(exists=True), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
def stats(tweets_path, out_dir):
    """Per-class dataset statistics with plots."""
    from misinfo.dataset import dataset_stats, ingest_tweets

    records = ingest_tweets(tweets_path).records
    report = dataset_stats(records, out_dir=out_dir)
    click.echo(json.dumps(report.to_json(), indent=2))


@main.command("export-annotations")
@click.option("--tweets", "tweets_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def export_annotations(tweets_path, out_path):
    """Write an annotation sheet (machine labels hidden)."""
    from misinfo.dataset import export_annotation_tasks, ingest_tweets

    records = ingest_tweets(tweets_path).records
    export_annotation_tasks(records, out_path)
    click.echo(f"wrote {len(records)} rows to {out_path}")


@main.command()
@click.option("--labelled", type=click.Path(exists=True), required=True)
@click.option("--unlabelled", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON with training and network overrides.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def train(labelled, unlabelled, config_path, out_dir):
    """Train the fusion network on labelled (+ optional unlabelled) tweets."""
    from misinfo.dataset import ingest_tweets
    from misinfo.features import SCHEMA_VERSION, TWEET_FEATURE_DIM, USER_FEATURE_DIM
    from misinfo.model.network import NetworkConfig, save_checkpoint
    from misinfo.prep import FeaturePipeline
    from misinfo.training import TrainingConfig, save_history, train_new_model

    overrides = json.loads(Path(config_path).read_text()) if config_path else {}
    t_cfg = TrainingConfig(**overrides.get("training", {}))
    raw_net = overrides.get("network", {})
    for key in ("tweet_widths", "user_widths", "shared_widths"):
        if key in raw_net and raw_net[key] is not None:
            raw_net[key] = tuple(raw_net[key])
    n_cfg = NetworkConfig(**raw_net)

    labelled_records = [t for t in ingest_tweets(labelled).records if t.label is not None]
    unlabelled_records = (
        [t for t in ingest_tweets(unlabelled).records] if unlabelled else []
    )
    pipeline = FeaturePipeline.fit(labelled_records)
    prepared_l = [pipeline.prepare(t) for t in labelled_records]
    prepared_u = [pipeline.prepare(t) for t in unlabelled_records]

    result = train_new_model(
        prepared_l, prepared_u,
        vocab_size=len(pipeline.vocab), ek_dim=pipeline.ek_dim,
        tweet_feature_dim=TWEET_FEATURE_DIM, user_feature_dim=USER_FEATURE_DIM,
        network_config=n_cfg, training_config=t_cfg,
    )
    result.model.load_state_dict(result.best_state_dict)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "model.pt", result.model, pipeline.vocab, SCHEMA_VERSION)
    pipeline.vocab.save(out / "vocab.json")
    pipeline.tf_normalizer.save(out / "tf_normalizer.json")
    pipeline.uf_normalizer.save(out / "uf_normalizer.json")
    save_history(result.history, out / "history.jsonl")
    click.echo(f"steps={result.steps_run} best_val_f1={result.best_val_f1:.4f} -> {out}")


@main.command()
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--test", "test_path", type=click.Path(exists=True), required=True)
def evaluate(model_dir, test_path):
    """Metrics for a trained checkpoint on a labelled test file."""
    from misinfo.dataset import ingest_tweets
    from misinfo.evaluation import evaluate as evaluate_model
    from misinfo.features import SCHEMA_VERSION, Normalizer
    from misinfo.model.network import load_checkpoint
    from misinfo.model.vocab import Vocabulary
    from misinfo.prep import FeaturePipeline

    model_dir = Path(model_dir)
    vocab = Vocabulary.load(model_dir / "vocab.json")
    model, _, _ = load_checkpoint(model_dir / "model.pt", vocab, SCHEMA_VERSION)
    pipeline = FeaturePipeline(
        vocab=vocab,
        tf_normalizer=Normalizer.load(model_dir / "tf_normalizer.json"),
        uf_normalizer=Normalizer.load(model_dir / "uf_normalizer.json"),
        ek_dim=model.dims["ek_dim"],
    )
    records = [t for t in ingest_tweets(test_path).records if t.label is not None]
    examples = [pipeline.prepare(t) for t in records]
    metrics = evaluate_model(model, examples)
    click.echo(json.dumps(asdict(metrics), indent=2))


@main.command()
@click.option("--kind", type=click.Choice(["objective", "architecture"]), required=True)
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None,
              help="Optional JSON list of {name, training_overrides, network_overrides}.")
@click.option("--seeds", type=str, default="0,1,2,3,4", show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--max-steps", type=int, default=200, show_default=True)
def ablate(kind, spec_path, seeds, out_path, max_steps):
    """Run an ablation sweep on the built-in synthetic corpus."""
    from misinfo.evaluation import (
        AblationRow, AblationSpec, ablation_table, architecture_rows,
        objective_rows, run_ablation, save_ablation_results,
    )
    from misinfo.features import TWEET_FEATURE_DIM, USER_FEATURE_DIM
    from misinfo.model.network import NetworkConfig
    from misinfo.prep import FeaturePipeline
    from misinfo.synth import synthetic_corpus
    from misinfo.training import TrainingConfig

    if spec_path:
        rows = [AblationRow(**row) for row in json.loads(Path(spec_path).read_text())]
    else:
        rows = objective_rows() if kind == "objective" else architecture_rows()
    spec = AblationSpec(rows=rows, seeds=tuple(int(s) for s in seeds.split(",")))

    corpus = synthetic_corpus()
    pipeline = FeaturePipeline.fit(corpus.labelled, vocab_size=600)
    prepared_l = [pipeline.prepare(t) for t in corpus.labelled]
    prepared_u = [pipeline.prepare(t) for t in corpus.unlabelled]
    prepared_t = [pipeline.prepare(t) for t in corpus.test]

    base_net = NetworkConfig(
        embed_dim=32, hidden_size=32, ek_width=16, head_width=32,
        tweet_widths=(16, 32), user_widths=(16, 32, 32),
    )
    base_train = TrainingConfig(max_steps=max_steps, eval_every=25, batch_size=32)
    results = run_ablation(
        spec, prepared_l, prepared_u, prepared_t,
        vocab_size=len(pipeline.vocab), ek_dim=pipeline.ek_dim,
        tweet_feature_dim=TWEET_FEATURE_DIM, user_feature_dim=USER_FEATURE_DIM,
        base_training=base_train, base_network=base_net,
    )
    save_ablation_results(results, out_path)
    click.echo(ablation_table(results))


@main.command()
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(model_dir, host, port):
    """Start the classification API over a trained checkpoint."""
    import uvicorn

    from misinfo.api import build_app
    from misinfo.features import SCHEMA_VERSION, Normalizer
    from misinfo.model.network import load_checkpoint
    from misinfo.model.vocab import Vocabulary
    from misinfo.prep import FeaturePipeline
    from misinfo.service import ClassificationService

    model_dir = Path(model_dir)
    vocab = Vocabulary.load(model_dir / "vocab.json")
    model, version, _ = load_checkpoint(model_dir / "model.pt", vocab, SCHEMA_VERSION)
    pipeline = FeaturePipeline(
        vocab=vocab,
        tf_normalizer=Normalizer.load(model_dir / "tf_normalizer.json"),
        uf_normalizer=Normalizer.load(model_dir / "uf_normalizer.json"),
        ek_dim=model.dims["ek_dim"],
    )
    service = ClassificationService(model, pipeline, model_version=version)
    uvicorn.run(build_app(service), host=host, port=port)


if __name__ == "__main__":
    main()
