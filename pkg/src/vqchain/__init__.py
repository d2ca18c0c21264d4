"""Latent-space codebooks with threshold replacement and clip chaining.

The package covers the full desk-scale loop: build a K-Means codebook over
latent tokens, pull drifting tokens back toward their centroids with a
distance threshold, chain overlapping clips off a pivotal frame, and measure
how far a long run wanders with and without the mitigation.
"""

from .codebook import (
    Codebook,
    KMeansConfig,
    ProjectionOutcome,
    kmeans_build,
    nearest_centroid,
    project_frame,
    project_tokens,
    suggest_tau,
    threshold_replace,
)
from .core import (
    DEFAULT_CLIP_LEN,
    DEFAULT_DIM,
    DEFAULT_TOKENS,
    TEMPORAL_STRIDE,
    DimensionMismatchError,
    FeatureVector,
    InvalidFrameCountError,
    LatentClip,
    LatentCorpus,
    LatentFrame,
    NonFiniteError,
    ZeroNormError,
    cosine_similarity,
    l2_distance,
    latent_to_pixel_frames,
    pixel_to_latent_frames,
    sqdist,
)
from .denoiser import (
    AttentionWeights,
    ToyBlock,
    attention,
    block_forward,
    init_audio_from_text,
    random_block,
    random_weights,
)
from .driftlab import (
    MITIGATION_RATIO,
    ComparisonSummary,
    DriftConfig,
    DriftReport,
    compare_runs,
    compare_series,
    simulate_long_run,
    toy_generate_clip,
)
from .scheduler import (
    ChainConfig,
    ChainResult,
    ConditioningBundle,
    assemble_conditioning,
    chain_generate,
    make_pivotal,
    stitch,
)

__version__ = "0.1.0"

__all__ = [
    "AttentionWeights",
    "ChainConfig",
    "ChainResult",
    "Codebook",
    "ComparisonSummary",
    "ConditioningBundle",
    "DEFAULT_CLIP_LEN",
    "DEFAULT_DIM",
    "DEFAULT_TOKENS",
    "DimensionMismatchError",
    "DriftConfig",
    "DriftReport",
    "FeatureVector",
    "InvalidFrameCountError",
    "KMeansConfig",
    "LatentClip",
    "LatentCorpus",
    "LatentFrame",
    "MITIGATION_RATIO",
    "NonFiniteError",
    "ProjectionOutcome",
    "TEMPORAL_STRIDE",
    "ToyBlock",
    "ZeroNormError",
    "attention",
    "block_forward",
    "chain_generate",
    "compare_runs",
    "compare_series",
    "cosine_similarity",
    "init_audio_from_text",
    "kmeans_build",
    "l2_distance",
    "latent_to_pixel_frames",
    "make_pivotal",
    "nearest_centroid",
    "pixel_to_latent_frames",
    "project_frame",
    "project_tokens",
    "random_block",
    "random_weights",
    "simulate_long_run",
    "sqdist",
    "stitch",
    "suggest_tau",
    "threshold_replace",
    "toy_generate_clip",
    "__version__",
]
