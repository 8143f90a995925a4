"""Bidirectional recurrent text encoder with attention pooling.

Token embeddings run through a single-layer BiLSTM; per-step forward and
backward hidden states are concatenated, and the concatenated final states
act as the query for a softmax attention over the steps. The pooled vector
is the text representation handed to the fusion network.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

MAX_SEQUENCE_LENGTH = 128


@dataclass
class EncodedText:
    """Single-sequence encoder output: per-step states, final states, pooled vector."""

    hidden: torch.Tensor      # (N, 2H)
    final: torch.Tensor       # (2H,)
    pooled: torch.Tensor      # (2H,)
    attention: torch.Tensor   # (N,) weights, sum to 1


def attention_pool(
    hidden: torch.Tensor, final: torch.Tensor, mask: torch.Tensor | None = None
) -> tuple[torch.Tensor, torch.Tensor]:
    """Softmax attention over time steps with the final state as query.

    ``hidden`` is (B, N, 2H) and ``final`` is (B, 2H); returns the pooled
    (B, 2H) vectors and the (B, N) attention weights. Padded steps are masked
    out before the softmax.
    """
    scores = torch.einsum("bnh,bh->bn", hidden, final)
    if mask is not None:
        scores = scores.masked_fill(~mask, float("-inf"))
    weights = torch.softmax(scores, dim=1)
    pooled = torch.einsum("bn,bnh->bh", weights, hidden)
    return pooled, weights


class TextEncoder(nn.Module):
    """Single-layer BiLSTM over embedded tokens."""

    def __init__(self, embed_dim: int, hidden_size: int):
        super().__init__()
        self.hidden_size = hidden_size
        self.lstm = nn.LSTM(embed_dim, hidden_size, num_layers=1,
                            bidirectional=True, batch_first=True)

    def forward(
        self, embedded: torch.Tensor, lengths: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Encode a padded batch.

        ``embedded`` is (B, N, D); ``lengths`` holds true lengths >= 1.
        Returns per-step hidden states (B, N, 2H) zeroed at padding and the
        concatenated final states (B, 2H) taken at each sequence's true end.
        """
        if embedded.size(1) == 0 or int(lengths.min()) < 1:
            raise ValueError("encoder requires at least one token per sequence")
        if embedded.size(1) > MAX_SEQUENCE_LENGTH:
            raise ValueError(
                f"sequence length {embedded.size(1)} exceeds {MAX_SEQUENCE_LENGTH}"
            )
        packed = nn.utils.rnn.pack_padded_sequence(
            embedded, lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        out, (h_n, _) = self.lstm(packed)
        hidden, _ = nn.utils.rnn.pad_packed_sequence(
            out, batch_first=True, total_length=embedded.size(1)
        )
        final = torch.cat([h_n[0], h_n[1]], dim=1)  # forward ++ backward
        return hidden, final

    def encode(self, embedded: torch.Tensor, use_attention: bool = True) -> EncodedText:
        """Convenience single-sequence path; ``embedded`` is (N, D)."""
        lengths = torch.tensor([embedded.size(0)])
        hidden, final = self.forward(embedded.unsqueeze(0), lengths)
        if use_attention:
            pooled, weights = attention_pool(hidden, final)
        else:
            pooled = final
            weights = torch.full((1, embedded.size(0)), 1.0 / embedded.size(0),
                                 dtype=embedded.dtype)
        return EncodedText(hidden=hidden[0], final=final[0],
                           pooled=pooled[0], attention=weights[0])
