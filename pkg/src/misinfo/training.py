"""Mixed-objective training: supervised, adversarial, and virtual-adversarial.

The step loss is l_mix = lambda_ml * l_ml + lambda_at * l_at + lambda_vat * l_vat.

l_ml is binary cross-entropy on labelled batches. l_at is the same loss at
embeddings shifted by an adversarial perturbation of fixed L2 norm eps_at
along the loss gradient. l_vat is the KL divergence between predictions on
clean and perturbed inputs, with the perturbation direction found by power
iteration; it needs no labels, so unlabelled data participates. Perturbations
are treated as constants when differentiating with respect to parameters.

Sign note: the perturbation moves along the normalized gradient of the loss
(the direction that locally increases it); a perturbation that reduced the
loss would not be adversarial.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from misinfo.model.network import Batch, FusionModel, NetworkConfig, concat_batches
from misinfo.prep import FAKE_INDEX, PreparedExample, collate

PROB_FLOOR = 1e-7


@dataclass
class TrainingConfig:
    lambda_ml: float = 1.0
    lambda_at: float = 1.0
    lambda_vat: float = 1.0
    eps_at: float = 2.0
    eps_vat: float = 1.0
    xi: float = 1e-6
    power_iterations: int = 1
    learning_rate: float = 1e-3
    adam_beta1: float = 0.90
    adam_beta2: float = 0.98
    lr_decay_factor: float = 0.5
    plateau_patience: int = 5
    early_stop_patience: int = 20
    grad_clip_norm: float = 1.0
    batch_size: int = 32
    unlabelled_ratio: float = 1.0
    max_steps: int = 1000
    eval_every: int = 20
    validation_fraction: float = 0.1
    seed: int = 0
    num_threads: int = 1

    def __post_init__(self):
        if min(self.lambda_ml, self.lambda_at, self.lambda_vat) < 0:
            raise ValueError("loss weights must be >= 0")
        if self.lambda_ml + self.lambda_at + self.lambda_vat == 0:
            raise ValueError("at least one loss weight must be positive")
        for name in ("eps_at", "eps_vat", "xi", "learning_rate", "grad_clip_norm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.power_iterations < 1:
            raise ValueError("power_iterations must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass
class LossBreakdown:
    step: int
    l_ml: float
    l_at: float
    l_vat: float
    l_mix: float
    grad_norm: float
    learning_rate: float
    vat_degenerate: bool = False
    val_accuracy: Optional[float] = None
    val_f1: Optional[float] = None


class TrainingDiverged(RuntimeError):
    def __init__(self, term: str, step: int, value: float):
        super().__init__(f"non-finite {term} loss at step {step}: {value}")
        self.term = term
        self.step = step


def _fake_probability(model: FusionModel, batch: Batch,
                      perturbation: Optional[torch.Tensor] = None) -> torch.Tensor:
    logits = model.forward(batch, perturbation=perturbation)
    probs = torch.softmax(logits, dim=-1)[:, FAKE_INDEX]
    return probs.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)


def _binary_cross_entropy(p_fake: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    y = labels.to(p_fake.dtype)
    return -(y * torch.log(p_fake) + (1.0 - y) * torch.log(1.0 - p_fake)).mean()


def ml_loss(model: FusionModel, batch: Batch) -> torch.Tensor:
    """Mean binary cross-entropy over a labelled batch."""
    if batch.labels is None:
        raise ValueError("ml_loss requires labels")
    return _binary_cross_entropy(_fake_probability(model, batch), batch.labels)


def adversarial_perturbation(
    model: FusionModel, batch: Batch, eps: float
) -> torch.Tensor:
    """Embedding-shaped tensor of L2 norm eps along the loss gradient.

    The gradient is taken with respect to the embedded inputs over the whole
    batch, so one normalization covers the full tensor. A zero gradient
    yields a zero perturbation.
    """
    if batch.labels is None:
        raise ValueError("adversarial perturbation requires labels")
    embedded = model.embed_tokens(batch.token_ids).detach().requires_grad_(True)
    logits = model.forward_from_embedded(embedded, batch)
    p_fake = torch.softmax(logits, dim=-1)[:, FAKE_INDEX].clamp(PROB_FLOOR, 1 - PROB_FLOOR)
    loss = _binary_cross_entropy(p_fake, batch.labels)
    (grad,) = torch.autograd.grad(loss, embedded)
    norm = grad.flatten().norm(p=2)
    if norm == 0 or eps == 0:
        return torch.zeros_like(grad)
    return (eps * grad / norm).detach()


def at_loss(
    model: FusionModel,
    batch: Batch,
    eps: float,
    perturbation: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Cross-entropy at adversarially shifted embeddings; eps=0 gives ml_loss.

    ``perturbation`` overrides the computed direction (already a constant with
    respect to parameters), which gradient checks rely on.
    """
    if perturbation is None:
        if eps == 0:
            return ml_loss(model, batch)
        perturbation = adversarial_perturbation(model, batch, eps)
    return _binary_cross_entropy(
        _fake_probability(model, batch, perturbation=perturbation), batch.labels
    )


def _kl_divergence(p: torch.Tensor, q: torch.Tensor) -> torch.Tensor:
    """Mean KL(p || q) over the batch; both are (B, 2) probability rows."""
    p = p.clamp(PROB_FLOOR, 1.0)
    q = q.clamp(PROB_FLOOR, 1.0)
    return (p * (torch.log(p) - torch.log(q))).sum(dim=-1).mean()


def vat_perturbation(
    model: FusionModel,
    batch: Batch,
    xi: float = 1e-6,
    eps: float = 1.0,
    iterations: int = 1,
) -> tuple[torch.Tensor, bool]:
    """Power-iteration approximation of the KL-maximizing perturbation.

    Starts from a random unit tensor delta; each iteration evaluates
    KL(clean || perturbed-by-xi*delta), takes the gradient with respect to
    delta and renormalizes. Returns (eps * delta, degenerate_flag); the flag
    is True when a zero gradient forced keeping the previous direction.
    Labels are never used. Dropout is disabled internally so clean and
    perturbed passes see the same function.
    """
    was_training = model.training
    model.eval()
    degenerate = False
    try:
        embedded = model.embed_tokens(batch.token_ids).detach()
        with torch.no_grad():
            p_clean = torch.softmax(model.forward_from_embedded(embedded, batch), dim=-1)
        delta = torch.randn(embedded.shape, dtype=embedded.dtype)
        delta = delta / delta.flatten().norm(p=2)
        for _ in range(iterations):
            probe = (xi * delta).requires_grad_(True)
            q = torch.softmax(model.forward_from_embedded(embedded + probe, batch), dim=-1)
            kl = _kl_divergence(p_clean, q)
            (grad,) = torch.autograd.grad(kl, probe)
            norm = grad.flatten().norm(p=2)
            if not torch.isfinite(norm) or norm == 0:
                degenerate = True
                break
            delta = (grad / norm).detach()
        return (eps * delta).detach(), degenerate
    finally:
        model.train(was_training)


def vat_loss(
    model: FusionModel,
    batch: Batch,
    xi: float = 1e-6,
    eps: float = 1.0,
    iterations: int = 1,
    perturbation: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Mean KL between clean and adversarially perturbed predictions.

    The clean distribution is a constant with respect to parameters; only the
    perturbed branch carries gradients. Works on labelled and unlabelled
    examples alike. ``perturbation`` skips the power iteration (fixed
    direction for gradient checks).
    """
    if perturbation is None:
        perturbation, _ = vat_perturbation(
            model, batch, xi=xi, eps=eps, iterations=iterations
        )
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            p_clean = torch.softmax(model.forward(batch), dim=-1)
        q = torch.softmax(model.forward(batch, perturbation=perturbation), dim=-1)
        return _kl_divergence(p_clean, q)
    finally:
        model.train(was_training)


@dataclass
class TrainResult:
    model: FusionModel
    best_state_dict: dict
    history: list[LossBreakdown]
    best_val_f1: float
    steps_run: int


def _simple_metrics(model: FusionModel, examples: Sequence[PreparedExample],
                    dtype: torch.dtype) -> tuple[float, float]:
    """(accuracy, fake-class F1) for validation tracking."""
    batch = collate(examples, dtype=dtype, require_labels=True)
    with torch.no_grad():
        probs = model.probabilities(batch, mode="eval")
    pred = (probs[:, FAKE_INDEX] > 0.5).long()
    truth = batch.labels
    accuracy = float((pred == truth).float().mean())
    tp = int(((pred == 1) & (truth == 1)).sum())
    fp = int(((pred == 1) & (truth == 0)).sum())
    fn = int(((pred == 0) & (truth == 1)).sum())
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0
    return accuracy, f1


def _stratified_validation_split(
    examples: Sequence[PreparedExample], fraction: float, rng: np.random.Generator
) -> tuple[list[PreparedExample], list[PreparedExample]]:
    by_class: dict[int, list[PreparedExample]] = {}
    for ex in examples:
        by_class.setdefault(ex.label, []).append(ex)
    train: list[PreparedExample] = []
    val: list[PreparedExample] = []
    for members in by_class.values():
        order = rng.permutation(len(members))
        n_val = max(1, round(fraction * len(members)))
        for j, idx in enumerate(order):
            (val if j < n_val else train).append(members[idx])
    if not train or not val:
        raise ValueError("validation split left train or validation empty")
    return train, val


def train(
    model: FusionModel,
    labelled: Sequence[PreparedExample],
    unlabelled: Sequence[PreparedExample],
    config: TrainingConfig,
    dtype: torch.dtype = torch.float32,
) -> TrainResult:
    """Adam training of the mixed objective with early stopping.

    Deterministic given config.seed when num_threads is 1: every random draw
    (validation split, batch order, dropout, VAT noise) flows from the seeds
    set here.
    """
    if not labelled:
        raise ValueError("labelled training examples required")
    if any(ex.label is None for ex in labelled):
        raise ValueError("labelled pool contains unlabelled examples")

    torch.set_num_threads(config.num_threads)
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    train_pool, val_pool = _stratified_validation_split(
        labelled, config.validation_fraction, rng
    )
    n_unlab = int(round(config.batch_size * config.unlabelled_ratio))

    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=config.learning_rate,
        betas=(config.adam_beta1, config.adam_beta2),
    )

    def batches(pool: Sequence[PreparedExample], size: int):
        """Endless shuffled batches."""
        while True:
            order = rng.permutation(len(pool))
            for start in range(0, len(pool), size):
                chunk = [pool[i] for i in order[start : start + size]]
                if len(chunk) == size:
                    yield chunk

    labelled_iter = batches(train_pool, min(config.batch_size, len(train_pool)))
    unlabelled_iter = (
        batches(unlabelled, min(n_unlab, len(unlabelled)))
        if (unlabelled and n_unlab > 0)
        else None
    )

    history: list[LossBreakdown] = []
    best_val_f1 = -1.0
    best_state = copy.deepcopy(model.state_dict())
    evals_since_improve = 0
    evals_since_decay = 0
    stop = False
    step = 0

    model.train()
    while step < config.max_steps and not stop:
        step += 1
        batch_l = collate(next(labelled_iter), dtype=dtype, require_labels=True)
        if unlabelled_iter is not None:
            batch_u = collate(next(unlabelled_iter), dtype=dtype)
            vat_batch = concat_batches(batch_l, batch_u)
        else:
            vat_batch = batch_l

        terms: dict[str, torch.Tensor | float] = {}
        terms["ml"] = ml_loss(model, batch_l) if config.lambda_ml > 0 else 0.0
        terms["at"] = (
            at_loss(model, batch_l, config.eps_at) if config.lambda_at > 0 else 0.0
        )
        vat_degenerate = False
        if config.lambda_vat > 0:
            r_vadv, vat_degenerate = vat_perturbation(
                model, vat_batch, xi=config.xi, eps=config.eps_vat,
                iterations=config.power_iterations,
            )
            terms["vat"] = vat_loss(model, vat_batch, perturbation=r_vadv)
        else:
            terms["vat"] = 0.0
        for name, value in terms.items():
            scalar = float(value.detach()) if torch.is_tensor(value) else float(value)
            if not math.isfinite(scalar):
                raise TrainingDiverged(name, step, scalar)

        mix = (
            config.lambda_ml * terms["ml"]
            + config.lambda_at * terms["at"]
            + config.lambda_vat * terms["vat"]
        )
        optimizer.zero_grad()
        mix.backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip_norm)
        post_clip = math.sqrt(
            sum(float((p.grad ** 2).sum()) for p in model.parameters() if p.grad is not None)
        )
        optimizer.step()

        l_ml, l_at, l_vat = (
            float(terms[k].detach()) if torch.is_tensor(terms[k]) else float(terms[k])
            for k in ("ml", "at", "vat")
        )
        entry = LossBreakdown(
            step=step,
            l_ml=l_ml,
            l_at=l_at,
            l_vat=l_vat,
            # logged in float64 so the weighted-sum identity holds exactly
            l_mix=config.lambda_ml * l_ml + config.lambda_at * l_at + config.lambda_vat * l_vat,
            grad_norm=post_clip,
            learning_rate=optimizer.param_groups[0]["lr"],
            vat_degenerate=vat_degenerate,
        )

        if step % config.eval_every == 0 or step == config.max_steps:
            accuracy, f1 = _simple_metrics(model, val_pool, dtype)
            model.train()
            entry.val_accuracy = accuracy
            entry.val_f1 = f1
            if f1 > best_val_f1:
                best_val_f1 = f1
                best_state = copy.deepcopy(model.state_dict())
                evals_since_improve = 0
                evals_since_decay = 0
            else:
                evals_since_improve += 1
                evals_since_decay += 1
            if evals_since_decay >= config.plateau_patience:
                for group in optimizer.param_groups:
                    group["lr"] *= config.lr_decay_factor
                evals_since_decay = 0
            if evals_since_improve >= config.early_stop_patience:
                stop = True
        history.append(entry)

    return TrainResult(
        model=model,
        best_state_dict=best_state,
        history=history,
        best_val_f1=best_val_f1,
        steps_run=step,
    )


def train_new_model(
    labelled: Sequence[PreparedExample],
    unlabelled: Sequence[PreparedExample],
    vocab_size: int,
    ek_dim: int,
    tweet_feature_dim: int,
    user_feature_dim: int,
    network_config: NetworkConfig,
    training_config: TrainingConfig,
    dtype: torch.dtype = torch.float32,
) -> TrainResult:
    """Construct a model under the training seed, then train it."""
    torch.manual_seed(training_config.seed)
    model = FusionModel(
        vocab_size=vocab_size,
        ek_dim=ek_dim,
        tweet_feature_dim=tweet_feature_dim,
        user_feature_dim=user_feature_dim,
        config=network_config,
    )
    if dtype == torch.float64:
        model.double()
    return train(model, labelled, unlabelled, training_config, dtype=dtype)


def save_history(history: Sequence[LossBreakdown], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for entry in history:
            fh.write(json.dumps(asdict(entry)) + "\n")
    return path


def load_history(path: str | Path) -> list[LossBreakdown]:
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(LossBreakdown(**json.loads(line)))
    return out
