"""Metrics, ablation harnesses, and loss-curve reports.

The fake class is the positive class for precision/recall/F1; macro-averaged
variants are reported alongside since either reading of the headline numbers
is defensible. Ablation harnesses sweep objective-term toggles and
architecture layouts, training each named configuration over several seeds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from misinfo.model.network import FusionModel, NetworkConfig
from misinfo.prep import FAKE_INDEX, PreparedExample, collate
from misinfo.training import LossBreakdown, TrainingConfig, train_new_model


@dataclass
class Metrics:
    """Binary classification metrics; fake is the positive class."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: list[list[int]]  # rows true, cols predicted, order (genuine, fake)
    n: int

    @classmethod
    def from_confusion(cls, tp: int, fp: int, fn: int, tn: int) -> "Metrics":
        def prf(tp_, fp_, fn_):
            p = tp_ / (tp_ + fp_) if tp_ + fp_ > 0 else 0.0
            r = tp_ / (tp_ + fn_) if tp_ + fn_ > 0 else 0.0
            f = 2 * p * r / (p + r) if p + r > 0 else 0.0
            return p, r, f

        n = tp + fp + fn + tn
        if n == 0:
            raise ValueError("empty confusion matrix")
        precision, recall, f1 = prf(tp, fp, fn)
        neg_p, neg_r, neg_f = prf(tn, fn, fp)  # genuine as positive
        return cls(
            accuracy=(tp + tn) / n,
            precision=precision,
            recall=recall,
            f1=f1,
            macro_precision=(precision + neg_p) / 2,
            macro_recall=(recall + neg_r) / 2,
            macro_f1=(f1 + neg_f) / 2,
            confusion=[[tn, fp], [fn, tp]],
            n=n,
        )


def evaluate(
    model: FusionModel,
    test_examples: Sequence[PreparedExample],
    train_ids: Optional[set[str]] = None,
    dtype: torch.dtype = torch.float32,
) -> Metrics:
    """Eval-mode metrics over a test set; train/test id overlap is fatal."""
    if not test_examples:
        raise ValueError("test set is empty")
    if train_ids is not None:
        overlap = train_ids & {e.tweet_id for e in test_examples}
        if overlap:
            raise ValueError(f"test examples appear in train: {sorted(overlap)[:5]}")
    if any(e.label is None for e in test_examples):
        raise ValueError("test examples must be labelled")

    batch = collate(test_examples, dtype=dtype, require_labels=True)
    with torch.no_grad():
        probs = model.probabilities(batch, mode="eval")
    pred = (probs[:, FAKE_INDEX] > 0.5).long()
    truth = batch.labels
    tp = int(((pred == 1) & (truth == 1)).sum())
    fp = int(((pred == 1) & (truth == 0)).sum())
    fn = int(((pred == 0) & (truth == 1)).sum())
    tn = int(((pred == 0) & (truth == 0)).sum())
    return Metrics.from_confusion(tp, fp, fn, tn)


@dataclass
class AblationRow:
    name: str
    training_overrides: dict = field(default_factory=dict)
    network_overrides: dict = field(default_factory=dict)


@dataclass
class AblationSpec:
    rows: list[AblationRow]
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)

    def __post_init__(self):
        names = [r.name for r in self.rows]
        if len(set(names)) != len(names):
            raise ValueError("ablation row names must be distinct")


def objective_rows() -> list[AblationRow]:
    """Loss-term toggle grid: each named combination of ml/at/vat."""
    combos = [
        ("ml", dict(lambda_ml=1.0, lambda_at=0.0, lambda_vat=0.0)),
        ("ml+at", dict(lambda_ml=1.0, lambda_at=1.0, lambda_vat=0.0)),
        ("at+vat", dict(lambda_ml=0.0, lambda_at=1.0, lambda_vat=1.0)),
        ("ml+vat", dict(lambda_ml=1.0, lambda_at=0.0, lambda_vat=1.0)),
        ("ml+at+vat", dict(lambda_ml=1.0, lambda_at=1.0, lambda_vat=1.0)),
    ]
    return [AblationRow(name, training_overrides=o) for name, o in combos]


def architecture_rows() -> list[AblationRow]:
    """Fusion-layout grid: joint vs separate feature paths, attention, cross-stitch."""
    rows = [
        ("joint-128", dict(shared_widths=(128,), attention=False, cross_stitch=False)),
        ("joint-64-256+attn", dict(shared_widths=(64, 256), attention=True, cross_stitch=False)),
        (
            "split-64-256+attn+stitch-flat",
            dict(tweet_widths=(64, 256), user_widths=(64, 256), attention=True,
                 cross_stitch=True, early_fusion=False),
        ),
        (
            "joint-64-256-256-512",
            dict(shared_widths=(64, 256, 256, 512), attention=False, cross_stitch=False),
        ),
        (
            "joint-64-256-256-512+attn",
            dict(shared_widths=(64, 256, 256, 512), attention=True, cross_stitch=False),
        ),
        (
            "split-staged+attn+stitch",
            dict(tweet_widths=(64, 256), user_widths=(64, 256, 256), attention=True,
                 cross_stitch=True, early_fusion=True),
        ),
    ]
    return [AblationRow(name, network_overrides=o) for name, o in rows]


@dataclass
class AblationResult:
    name: str
    seed_metrics: list[Metrics]
    mean_accuracy: float = 0.0
    std_accuracy: float = 0.0
    mean_f1: float = 0.0
    std_f1: float = 0.0
    median_accuracy: float = 0.0
    error: Optional[str] = None

    def summarize(self) -> None:
        acc = [m.accuracy for m in self.seed_metrics]
        f1 = [m.f1 for m in self.seed_metrics]
        if acc:
            self.mean_accuracy = float(np.mean(acc))
            self.std_accuracy = float(np.std(acc))
            self.median_accuracy = float(np.median(acc))
            self.mean_f1 = float(np.mean(f1))
            self.std_f1 = float(np.std(f1))


def run_ablation(
    spec: AblationSpec,
    labelled: Sequence[PreparedExample],
    unlabelled: Sequence[PreparedExample],
    test: Sequence[PreparedExample],
    vocab_size: int,
    ek_dim: int,
    tweet_feature_dim: int,
    user_feature_dim: int,
    base_training: TrainingConfig,
    base_network: NetworkConfig,
) -> list[AblationResult]:
    """One result row per configuration; a failing configuration is recorded,
    not fatal to the sweep."""
    results = []
    train_ids = {e.tweet_id for e in labelled}
    for row in spec.rows:
        result = AblationResult(name=row.name, seed_metrics=[])
        try:
            for seed in spec.seeds:
                t_cfg = TrainingConfig(
                    **{**asdict(base_training), **row.training_overrides, "seed": seed}
                )
                n_cfg = NetworkConfig(
                    **{**_network_dict(base_network), **row.network_overrides}
                )
                outcome = train_new_model(
                    labelled, unlabelled, vocab_size, ek_dim,
                    tweet_feature_dim, user_feature_dim, n_cfg, t_cfg,
                )
                outcome.model.load_state_dict(outcome.best_state_dict)
                result.seed_metrics.append(
                    evaluate(outcome.model, test, train_ids=train_ids)
                )
            result.summarize()
        except Exception as exc:  # noqa: BLE001 - sweep must survive bad rows
            result.error = f"{type(exc).__name__}: {exc}"
        results.append(result)
    return results


def _network_dict(config: NetworkConfig) -> dict:
    d = asdict(config)
    d["tweet_widths"] = tuple(d["tweet_widths"])
    d["user_widths"] = tuple(d["user_widths"])
    if d["shared_widths"] is not None:
        d["shared_widths"] = tuple(d["shared_widths"])
    return d


def ablation_table(results: Sequence[AblationResult]) -> str:
    lines = [f"{'configuration':<34} {'acc (mean±σ)':<16} {'f1 (mean±σ)':<16}"]
    for r in results:
        if r.error:
            lines.append(f"{r.name:<34} FAILED: {r.error}")
        else:
            lines.append(
                f"{r.name:<34} {r.mean_accuracy:.3f}±{r.std_accuracy:.3f}      "
                f"{r.mean_f1:.3f}±{r.std_f1:.3f}"
            )
    return "\n".join(lines)


def save_ablation_results(results: Sequence[AblationResult], path: str | Path) -> Path:
    path = Path(path)
    payload = []
    for r in results:
        payload.append(
            {
                "name": r.name,
                "error": r.error,
                "mean_accuracy": r.mean_accuracy,
                "std_accuracy": r.std_accuracy,
                "median_accuracy": r.median_accuracy,
                "mean_f1": r.mean_f1,
                "std_f1": r.std_f1,
                "seed_metrics": [asdict(m) for m in r.seed_metrics],
            }
        )
    path.write_text(json.dumps(payload, indent=2))
    return path


def plot_loss_curves(
    histories: dict[str, Sequence[LossBreakdown]], out_dir: str | Path
) -> list[Path]:
    """One panel per loss term plus the net loss, all configurations overlaid."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panels = [("l_ml", "supervised loss"), ("l_at", "adversarial loss"),
              ("l_vat", "virtual adversarial loss"), ("l_mix", "net loss")]
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4))
    for ax, (attr, title) in zip(axes, panels):
        for name, history in histories.items():
            steps = [h.step for h in history]
            ax.plot(steps, [getattr(h, attr) for h in history], label=name, linewidth=1)
        ax.set_title(title)
        ax.set_xlabel("step")
        if histories:
            ax.legend(fontsize=7)
    fig.tight_layout()
    out_path = out_dir / "loss_curves.png"
    fig.savefig(out_path, dpi=100)
    plt.close(fig)
    return [out_path]


def loss_smoothness(history: Sequence[LossBreakdown], last_n: int = 50) -> float:
    """Variance of step-to-step supervised-loss deltas over the trailing window."""
    tail = [h.l_ml for h in history[-last_n:]]
    if len(tail) < 3:
        return 0.0
    deltas = np.diff(tail)
    return float(np.var(deltas))
