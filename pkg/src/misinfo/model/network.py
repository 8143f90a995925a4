"""Feature fusion network: cross-stitch mixing, staged concatenation, classifier head.

Inputs per example: token ids (text), a support-knowledge embedding, a tweet
feature vector and a user feature vector. Text runs through the BiLSTM plus
attention; tweet and user features run through dense paths mixed by a
cross-stitch unit; the tweet-side mix joins the text vector early, the
user-side mix joins late; the support embedding joins through its own affine
layer. A dropout-regularized head produces the 2-class distribution
(index 0 genuine, index 1 fake).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import torch
import torch.nn as nn

from misinfo.model.encoder import TextEncoder, attention_pool
from misinfo.model.vocab import PAD_ID, Vocabulary
from misinfo.records import CLASS_ORDER, Label


@dataclass
class NetworkConfig:
    """Widths and switches for the fusion network.

    ``shared_widths`` set means tweet and user features are concatenated at
    the input and run one joint dense stack (no cross-stitch); unset means
    separate paths with the cross-stitch unit after the first layer of each.
    ``early_fusion`` merges the tweet-side cross-stitch output with the text
    vector before the remaining tweet layers; otherwise it joins at the end.
    """

    tweet_widths: tuple[int, ...] = (64, 256)
    user_widths: tuple[int, ...] = (64, 256, 256)
    shared_widths: Optional[tuple[int, ...]] = None
    head_width: int = 128
    dropout: float = 0.3
    attention: bool = True
    cross_stitch: bool = True
    early_fusion: bool = True
    ek_width: int = 256
    embed_dim: int = 300
    hidden_size: int = 512

    def __post_init__(self):
        for widths in (self.tweet_widths, self.user_widths, self.shared_widths or ()):
            if any(w <= 0 for w in widths):
                raise ValueError("layer widths must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.head_width <= 0 or self.ek_width <= 0:
            raise ValueError("head_width and ek_width must be positive")
        if self.shared_widths is not None and self.cross_stitch:
            raise ValueError("cross-stitch requires separate tweet/user paths")


@dataclass
class Prediction:
    probabilities: tuple[float, float]
    label: Label
    confidence: float

    @classmethod
    def from_probabilities(cls, probs) -> "Prediction":
        p0, p1 = float(probs[0]), float(probs[1])
        if abs(p0 + p1 - 1.0) > 1e-6:
            raise ValueError(f"probabilities must sum to 1, got {p0 + p1}")
        idx = 0 if p0 >= p1 else 1  # tie resolves to index 0
        return cls(probabilities=(p0, p1), label=CLASS_ORDER[idx],
                   confidence=max(p0, p1))


@dataclass
class Batch:
    """Padded model input. ``labels`` is None for unlabelled examples."""

    token_ids: torch.Tensor      # (B, N) long, PAD_ID-padded
    lengths: torch.Tensor        # (B,) long, true lengths >= 1
    ek: torch.Tensor             # (B, ek_dim) float
    tweet_features: torch.Tensor  # (B, tf_dim) float
    user_features: torch.Tensor   # (B, uf_dim) float
    labels: Optional[torch.Tensor] = None  # (B,) long in {0, 1}

    @property
    def mask(self) -> torch.Tensor:
        n = self.token_ids.size(1)
        return torch.arange(n, device=self.token_ids.device)[None, :] < self.lengths[:, None]

    def __len__(self) -> int:
        return self.token_ids.size(0)

    def to_dtype(self, dtype: torch.dtype) -> "Batch":
        return Batch(self.token_ids, self.lengths, self.ek.to(dtype),
                     self.tweet_features.to(dtype), self.user_features.to(dtype),
                     self.labels)


def concat_batches(a: Batch, b: Batch) -> Batch:
    """Stack two batches, repadding token ids to the longer length."""
    n = max(a.token_ids.size(1), b.token_ids.size(1))

    def pad(ids: torch.Tensor) -> torch.Tensor:
        if ids.size(1) == n:
            return ids
        extra = torch.full((ids.size(0), n - ids.size(1)), PAD_ID, dtype=ids.dtype)
        return torch.cat([ids, extra], dim=1)

    labels = None
    if a.labels is not None and b.labels is not None:
        labels = torch.cat([a.labels, b.labels])
    return Batch(
        token_ids=torch.cat([pad(a.token_ids), pad(b.token_ids)]),
        lengths=torch.cat([a.lengths, b.lengths]),
        ek=torch.cat([a.ek, b.ek]),
        tweet_features=torch.cat([a.tweet_features, b.tweet_features]),
        user_features=torch.cat([a.user_features, b.user_features]),
        labels=labels,
    )


class CrossStitch(nn.Module):
    """Learnable linear mixing of two concatenated feature vectors.

    Initialized to the identity map with zero bias, so an untrained unit is
    an exact pass-through. ``enabled`` can be flipped at runtime to compare
    against the no-mixing network.
    """

    def __init__(self, dim: int, enabled: bool = True):
        super().__init__()
        self.dim = dim
        self.enabled = enabled
        self.weight = nn.Parameter(torch.eye(dim))
        self.bias = nn.Parameter(torch.zeros(dim))

    def forward(self, a: torch.Tensor, b: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if a.size(-1) + b.size(-1) != self.dim:
            raise ValueError(
                f"cross_stitch: input widths {a.size(-1)}+{b.size(-1)} != unit dim {self.dim}"
            )
        if not self.enabled:
            return a, b
        joint = torch.cat([a, b], dim=-1)
        mixed = joint @ self.weight.t() + self.bias
        return mixed[..., : a.size(-1)], mixed[..., a.size(-1):]


def _dense_stack(in_dim: int, widths: tuple[int, ...]) -> nn.Sequential:
    layers: list[nn.Module] = []
    for w in widths:
        layers.append(nn.Linear(in_dim, w))
        layers.append(nn.ReLU())
        in_dim = w
    return nn.Sequential(*layers)


class FusionModel(nn.Module):
    def __init__(
        self,
        vocab_size: int,
        ek_dim: int,
        tweet_feature_dim: int,
        user_feature_dim: int,
        config: NetworkConfig,
    ):
        super().__init__()
        self.config = config
        self.dims = {
            "vocab_size": vocab_size,
            "ek_dim": ek_dim,
            "tweet_feature_dim": tweet_feature_dim,
            "user_feature_dim": user_feature_dim,
        }
        self.embedding = nn.Embedding(vocab_size, config.embed_dim, padding_idx=PAD_ID)
        self.encoder = TextEncoder(config.embed_dim, config.hidden_size)
        self.ek_layer = nn.Linear(ek_dim, config.ek_width)
        text_dim = 2 * config.hidden_size

        if config.shared_widths is not None:
            self.shared_path = _dense_stack(
                tweet_feature_dim + user_feature_dim, config.shared_widths
            )
            self.cross_stitch = None
            head_in = text_dim + config.shared_widths[-1] + config.ek_width
        else:
            t0, u0 = config.tweet_widths[0], config.user_widths[0]
            self.tweet_in = _dense_stack(tweet_feature_dim, (t0,))
            self.user_in = _dense_stack(user_feature_dim, (u0,))
            self.cross_stitch = CrossStitch(t0 + u0, enabled=config.cross_stitch)
            if config.early_fusion:
                self.tweet_tail = _dense_stack(text_dim + t0, config.tweet_widths[1:])
                tweet_out = config.tweet_widths[-1] if config.tweet_widths[1:] else text_dim + t0
            else:
                self.tweet_tail = _dense_stack(t0, config.tweet_widths[1:])
                tweet_out = (config.tweet_widths[-1] if config.tweet_widths[1:] else t0) + text_dim
            self.user_tail = _dense_stack(u0, config.user_widths[1:])
            user_out = config.user_widths[-1] if config.user_widths[1:] else u0
            head_in = tweet_out + config.ek_width + user_out

        self.head_hidden = nn.Linear(head_in, config.head_width)
        self.head_dropout = nn.Dropout(config.dropout)
        self.head_out = nn.Linear(config.head_width, 2)

    def load_embedding_matrix(self, matrix) -> None:
        tensor = torch.as_tensor(matrix, dtype=self.embedding.weight.dtype)
        if tensor.shape != self.embedding.weight.shape:
            raise ValueError(
                f"embedding: expected {tuple(self.embedding.weight.shape)}, got {tuple(tensor.shape)}"
            )
        with torch.no_grad():
            self.embedding.weight.copy_(tensor)
            self.embedding.weight[PAD_ID] = 0.0

    def embed_tokens(self, token_ids: torch.Tensor) -> torch.Tensor:
        return self.embedding(token_ids)

    def encode_ek(self, ek: torch.Tensor) -> torch.Tensor:
        return self.ek_layer(ek)

    def _check_shapes(self, batch: Batch) -> None:
        checks = (
            ("ek_layer", batch.ek.size(-1), self.dims["ek_dim"]),
            ("tweet_features", batch.tweet_features.size(-1), self.dims["tweet_feature_dim"]),
            ("user_features", batch.user_features.size(-1), self.dims["user_feature_dim"]),
        )
        for name, got, want in checks:
            if got != want:
                raise ValueError(f"{name}: expected width {want}, got {got}")

    def forward(
        self,
        batch: Batch,
        perturbation: Optional[torch.Tensor] = None,
        mode: Optional[str] = None,
    ) -> torch.Tensor:
        """Return logits (B, 2). ``perturbation`` adds to the token embeddings."""
        if mode is not None:
            if mode not in ("train", "eval"):
                raise ValueError(f"mode must be train or eval, got {mode!r}")
            self.train(mode == "train")
        self._check_shapes(batch)

        embedded = self.embed_tokens(batch.token_ids)
        if perturbation is not None:
            embedded = embedded + perturbation
        return self.forward_from_embedded(embedded, batch)

    def forward_from_embedded(self, embedded: torch.Tensor, batch: Batch) -> torch.Tensor:
        """Forward pass from precomputed (possibly perturbed) embeddings."""
        hidden, final = self.encoder(embedded, batch.lengths)
        if self.config.attention:
            text_vec, _ = attention_pool(hidden, final, batch.mask)
        else:
            text_vec = final
        ek_vec = self.ek_layer(batch.ek)

        if self.config.shared_widths is not None:
            feature_vec = self.shared_path(
                torch.cat([batch.tweet_features, batch.user_features], dim=-1)
            )
            joined = torch.cat([text_vec, feature_vec, ek_vec], dim=-1)
        else:
            t = self.tweet_in(batch.tweet_features)
            u = self.user_in(batch.user_features)
            t_mix, u_mix = self.cross_stitch(t, u)
            u_out = self.user_tail(u_mix)
            if self.config.early_fusion:
                t_out = self.tweet_tail(torch.cat([text_vec, t_mix], dim=-1))
                joined = torch.cat([t_out, ek_vec, u_out], dim=-1)
            else:
                t_out = self.tweet_tail(t_mix)
                joined = torch.cat([text_vec, t_out, ek_vec, u_out], dim=-1)

        h = torch.relu(self.head_hidden(joined))
        h = self.head_dropout(h)
        return self.head_out(h)

    def probabilities(self, batch: Batch, mode: str = "eval") -> torch.Tensor:
        return torch.softmax(self.forward(batch, mode=mode), dim=-1)

    @torch.no_grad()
    def predict(self, batch: Batch) -> list[Prediction]:
        probs = self.probabilities(batch, mode="eval")
        return [Prediction.from_probabilities(row) for row in probs]


SCHEMA_KEY = "feature_schema_version"


def save_checkpoint(
    path: str | Path,
    model: FusionModel,
    vocab: Vocabulary,
    feature_schema_version: str,
    model_version: int = 1,
    extra: Optional[dict] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        SCHEMA_KEY: feature_schema_version,
        "vocab_hash": vocab.content_hash(),
        "config": asdict(model.config),
        "dims": dict(model.dims),
        "state_dict": model.state_dict(),
        "model_version": model_version,
        "extra": extra or {},
    }
    torch.save(payload, path)
    return path


def load_checkpoint(
    path: str | Path,
    vocab: Vocabulary,
    feature_schema_version: str,
) -> tuple[FusionModel, int, dict]:
    """Rebuild a model from disk; fails on schema or vocabulary mismatch."""
    payload = torch.load(Path(path), weights_only=False)
    if payload[SCHEMA_KEY] != feature_schema_version:
        raise ValueError(
            f"checkpoint feature schema {payload[SCHEMA_KEY]!r} does not match "
            f"current {feature_schema_version!r}"
        )
    if payload["vocab_hash"] != vocab.content_hash():
        raise ValueError("checkpoint vocabulary hash does not match supplied vocabulary")
    cfg_dict = dict(payload["config"])
    for key in ("tweet_widths", "user_widths"):
        cfg_dict[key] = tuple(cfg_dict[key])
    if cfg_dict.get("shared_widths") is not None:
        cfg_dict["shared_widths"] = tuple(cfg_dict["shared_widths"])
    config = NetworkConfig(**cfg_dict)
    model = FusionModel(config=config, **payload["dims"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, int(payload["model_version"]), payload.get("extra", {})
