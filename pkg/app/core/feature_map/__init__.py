from app.core.feature_map.embedding import (
    Embedding,
    FeatureMatrix,
    FrequencyMatrix,
    embed,
    embed_derivative,
    input_transform,
    materialize_frequencies,
    spec_hash,
)
from app.core.feature_map.quantiles import quantile
from app.core.feature_map.sampler import BaseSample, sample_base

__all__ = [
    "BaseSample",
    "Embedding",
    "FeatureMatrix",
    "FrequencyMatrix",
    "embed",
    "embed_derivative",
    "input_transform",
    "materialize_frequencies",
    "quantile",
    "sample_base",
    "spec_hash",
]
