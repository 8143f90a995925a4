"""Neural model: vocabulary, text encoder, feature fusion, checkpoints."""

from misinfo.model.vocab import PAD_ID, UNK_ID, Vocabulary, build_vocab, tokenize
from misinfo.model.encoder import EncodedText, TextEncoder, attention_pool
from misinfo.model.network import (
    CrossStitch,
    FusionModel,
    NetworkConfig,
    Prediction,
    load_checkpoint,
    save_checkpoint,
)
from misinfo.model.word2vec import finetune_embeddings

__all__ = [
    "PAD_ID",
    "UNK_ID",
    "Vocabulary",
    "build_vocab",
    "tokenize",
    "EncodedText",
    "TextEncoder",
    "attention_pool",
    "CrossStitch",
    "FusionModel",
    "NetworkConfig",
    "Prediction",
    "save_checkpoint",
    "load_checkpoint",
    "finetune_embeddings",
]
