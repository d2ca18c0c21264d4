"""Core latent-space types, distance arithmetic, and frame-count mapping.

Latent values are stored as float32; every reduction over them (distances,
norms, statistics) accumulates in float64. Squared distances follow one fixed
recipe everywhere in the package: terms accumulate over ascending dimension
index with a separate multiply and add per term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Fixed temporal downsampling between pixel and latent frame counts:
# p pixel frames map to (p - 1) / 4 + 1 latent frames.
TEMPORAL_STRIDE = 4

# Desk-scale defaults; the mechanisms are dimension-agnostic.
DEFAULT_DIM = 16
DEFAULT_TOKENS = 64
DEFAULT_CLIP_LEN = 28


class DimensionMismatchError(ValueError):
    """Operands have incompatible latent dimensions or token counts."""


class InvalidFrameCountError(ValueError):
    """A pixel frame count does not land on the temporal stride grid."""


class NonFiniteError(ValueError):
    """A latent payload contains NaN or infinity."""


class ZeroNormError(ValueError):
    """Cosine similarity is undefined for a zero vector."""


def _locked_f32(values, name: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float32)
    if arr.ndim != ndim:
        raise DimensionMismatchError(
            f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionMismatchError(f"{name} must be non-empty")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """One D-dimensional latent feature at a spatial token position."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _locked_f32(self.values, "values", 1))

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class LatentFrame:
    """S spatial token vectors forming one latent frame."""

    tokens: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tokens", _locked_f32(self.tokens, "tokens", 2))
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")

    @property
    def token_count(self) -> int:
        return self.tokens.shape[0]

    @property
    def dim(self) -> int:
        return self.tokens.shape[1]


@dataclass(frozen=True, eq=False)
class LatentClip:
    """T consecutive latent frames produced as one generation unit."""

    frames: tuple[LatentFrame, ...]
    clip_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ValueError("a clip needs at least one frame")
        if self.clip_index < 0:
            raise ValueError(f"clip_index must be >= 0, got {self.clip_index}")
        s, d = self.frames[0].tokens.shape
        for i, f in enumerate(self.frames):
            if f.frame_index != i:
                raise ValueError(
                    f"frame_index must run 0..{len(self.frames) - 1}, "
                    f"got {f.frame_index} at position {i}")
            if f.tokens.shape != (s, d):
                raise DimensionMismatchError(
                    f"frame {i} has token shape {f.tokens.shape}, expected {(s, d)}")

    @property
    def length(self) -> int:
        return len(self.frames)

    @property
    def token_count(self) -> int:
        return self.frames[0].token_count

    @property
    def dim(self) -> int:
        return self.frames[0].dim

    def token_matrix(self) -> np.ndarray:
        """All clip tokens stacked as a (T * S, D) float32 matrix."""
        return np.concatenate([f.tokens for f in self.frames], axis=0)


@dataclass(frozen=True, eq=False)
class LatentCorpus:
    """N pooled feature vectors used to train a codebook."""

    vectors: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "vectors",
                           _locked_f32(self.vectors, "vectors", 2))

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def pixel_to_latent_frames(pixel_frames: int) -> int:
    """Map a pixel-space frame count onto the latent temporal grid."""
    if pixel_frames < 1:
        raise InvalidFrameCountError(
            f"pixel frame count must be >= 1, got {pixel_frames}")
    if (pixel_frames - 1) % TEMPORAL_STRIDE != 0:
        raise InvalidFrameCountError(
            f"pixel frame count {pixel_frames} is not on the stride-"
            f"{TEMPORAL_STRIDE} grid (need (count - 1) divisible by "
            f"{TEMPORAL_STRIDE})")
    return (pixel_frames - 1) // TEMPORAL_STRIDE + 1


def latent_to_pixel_frames(latent_frames: int) -> int:
    """Inverse of pixel_to_latent_frames."""
    if latent_frames < 1:
        raise InvalidFrameCountError(
            f"latent frame count must be >= 1, got {latent_frames}")
    return (latent_frames - 1) * TEMPORAL_STRIDE + 1


def sqdist(a: np.ndarray, b: np.ndarray) -> float:
    """Reference squared distance: float64 terms summed in index order."""
    acc = 0.0
    for j in range(a.shape[0]):
        t = float(a[j]) - float(b[j])
        acc += t * t
    return acc


def l2_distance(a: FeatureVector, b: FeatureVector) -> float:
    """Euclidean distance between two feature vectors."""
    if a.dim != b.dim:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.dim} vs {b.dim}")
    return math.sqrt(sqdist(a.values, b.values))


def cosine_similarity(a: FeatureVector, b: FeatureVector) -> float:
    """Cosine of the angle between two feature vectors, clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.dim} vs {b.dim}")
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    na = math.sqrt(float(np.dot(av, av)))
    nb = math.sqrt(float(np.dot(bv, bv)))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine similarity needs non-zero vectors")
    c = float(np.dot(av, bv)) / (na * nb)
    return max(-1.0, min(1.0, c))
