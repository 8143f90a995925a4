"""Skip-gram embedding fine-tuning over an unlabelled text stream.

Adapts an existing embedding matrix with skip-gram negative sampling. The
corpus is consumed as a stream (one pass per epoch), so arbitrarily large
unlabelled pools work; desk-scale runs finish in seconds. The padding row
stays zero throughout.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from misinfo.model.vocab import PAD_ID, Vocabulary


def _sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))


def finetune_embeddings(
    corpus: Iterable[str],
    initial: np.ndarray,
    vocab: Vocabulary,
    epochs: int = 1,
    window: int = 2,
    negatives: int = 3,
    lr: float = 0.025,
    seed: int = 0,
) -> np.ndarray:
    """Return a fine-tuned copy of ``initial``; epochs=0 returns it unchanged.

    Streaming constraint: ``corpus`` may be a generator, so sentences are
    re-requested per epoch only when the input is re-iterable; pass a list
    for multi-epoch runs.
    """
    matrix = np.array(initial, dtype=np.float64, copy=True)
    if matrix.shape[0] != len(vocab):
        raise ValueError(
            f"embedding rows {matrix.shape[0]} != vocabulary size {len(vocab)}"
        )
    if epochs == 0:
        return matrix

    rng = np.random.default_rng(seed)
    vocab_size = matrix.shape[0]
    # Context vectors are an auxiliary table, discarded after training.
    context = (rng.standard_normal(matrix.shape) / matrix.shape[1]).astype(np.float64)

    for _ in range(epochs):
        for text in corpus:
            ids = [i for i in vocab.encode(text) if i != PAD_ID]
            n = len(ids)
            for center_pos, center in enumerate(ids):
                lo = max(0, center_pos - window)
                hi = min(n, center_pos + window + 1)
                for ctx_pos in range(lo, hi):
                    if ctx_pos == center_pos:
                        continue
                    targets = np.empty(negatives + 1, dtype=np.int64)
                    targets[0] = ids[ctx_pos]
                    targets[1:] = rng.integers(2, vocab_size, size=negatives)
                    labels = np.zeros(negatives + 1)
                    labels[0] = 1.0
                    vec = matrix[center]
                    ctx_vecs = context[targets]
                    preds = _sigmoid(ctx_vecs @ vec)
                    errs = (labels - preds) * lr
                    matrix[center] = vec + errs @ ctx_vecs
                    context[targets] += np.outer(errs, vec)
        matrix[PAD_ID] = 0.0
    return matrix
