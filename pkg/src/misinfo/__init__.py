"""Semi-supervised fake-tweet classification.

Subpackages and modules:
    dataset     ingestion, weak labelling, annotation, splits, statistics
    features    tweet/user feature vectors and normalization
    knowledge   external-evidence retrieval and pooling
    embeddings  sentence-encoder interface (offline hashing default)
    model       vocabulary, text encoder, fusion network, checkpoints
    training    mixed supervised/adversarial/virtual-adversarial objective
    evaluation  metrics, ablation harnesses, loss-curve reports
    service     classification API with feedback-gated online learning
"""

__version__ = "0.1.0"
