"""Minimal attention block exercising the audio-injection scheme.

The block is deliberately tiny: single-head scaled dot-product attention,
no layer norm, no MLP. It exists to verify one invariant at toy scale: a
fresh audio-attention branch initialized by copying the text-attention
weights behaves identically to the text branch on identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatchError, NonFiniteError

# Training-time constant, recorded for documentation only: general videos
# without any audio track are mixed into training with this probability, with
# the audio channel set to all zeros. Inference code models the zero-audio
# case as an empty audio_tokens sequence.
TRAINING_SILENT_VIDEO_MIX = 0.2


def _locked_square(mat, name: str, d_model: int) -> np.ndarray:
    arr = np.array(mat, dtype=np.float64)
    if arr.shape != (d_model, d_model):
        raise DimensionMismatchError(
            f"{name} must be ({d_model}, {d_model}), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AttentionWeights:
    """Projection matrices for one single-head attention branch."""

    query: np.ndarray
    key: np.ndarray
    value: np.ndarray
    output: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.query).shape[0]
        for name in ("query", "key", "value", "output"):
            object.__setattr__(self, name,
                               _locked_square(getattr(self, name), name, d))

    @property
    def d_model(self) -> int:
        return self.query.shape[0]


@dataclass(frozen=True, eq=False)
class ToyBlock:
    """Residual block with self-, text-, and audio-attention branches."""

    self_attn: AttentionWeights
    text_attn: AttentionWeights
    audio_attn: AttentionWeights

    def __post_init__(self):
        d = self.self_attn.d_model
        if self.text_attn.d_model != d or self.audio_attn.d_model != d:
            raise DimensionMismatchError(
                "all attention branches must share d_model")

    @property
    def d_model(self) -> int:
        return self.self_attn.d_model


def random_weights(d_model: int, rng: np.random.Generator) -> AttentionWeights:
    """Gaussian-initialized attention weights, scaled 1/sqrt(d_model)."""
    s = 1.0 / math.sqrt(d_model)
    return AttentionWeights(query=rng.standard_normal((d_model, d_model)) * s,
                            key=rng.standard_normal((d_model, d_model)) * s,
                            value=rng.standard_normal((d_model, d_model)) * s,
                            output=rng.standard_normal((d_model, d_model)) * s)


def random_block(d_model: int, rng: np.random.Generator) -> ToyBlock:
    return ToyBlock(self_attn=random_weights(d_model, rng),
                    text_attn=random_weights(d_model, rng),
                    audio_attn=random_weights(d_model, rng))


def init_audio_from_text(block: ToyBlock) -> ToyBlock:
    """Return a block whose audio-attention weights are element-wise copies
    of the text-attention weights; other branches are untouched."""
    t = block.text_attn
    copied = AttentionWeights(query=t.query.copy(), key=t.key.copy(),
                              value=t.value.copy(), output=t.output.copy())
    return ToyBlock(self_attn=block.self_attn, text_attn=block.text_attn,
                    audio_attn=copied)


def attention(x: np.ndarray, ctx: np.ndarray,
              w: AttentionWeights) -> np.ndarray:
    """Single-head scaled dot-product attention of x over ctx.

    An empty context contributes a zero term, which is how an absent
    modality (no audio) is represented.
    """
    if ctx.shape[0] == 0:
        return np.zeros_like(x)
    q = x @ w.query
    k = ctx @ w.key
    v = ctx @ w.value
    scores = (q @ k.T) / math.sqrt(x.shape[1])
    scores -= scores.max(axis=1, keepdims=True)
    probs = np.exp(scores)
    probs /= probs.sum(axis=1, keepdims=True)
    return (probs @ v) @ w.output


def _as_tokens(tokens, name: str, d_model: int) -> np.ndarray:
    arr = np.asarray(tokens, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, d_model)
    if arr.ndim != 2 or arr.shape[1] != d_model:
        raise DimensionMismatchError(
            f"{name} must be (n, {d_model}), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains non-finite values")
    return arr


def block_forward(block: ToyBlock, latent_tokens, text_tokens,
                  audio_tokens) -> np.ndarray:
    """out = x + SelfAttn(x) + CrossAttn_text(x) + CrossAttn_audio(x).

    audio_tokens (or text_tokens) may be empty; an empty modality adds
    exactly zero.
    """
    d = block.d_model
    x = _as_tokens(latent_tokens, "latent_tokens", d)
    text = _as_tokens(text_tokens, "text_tokens", d)
    audio = _as_tokens(audio_tokens, "audio_tokens", d)
    return (x
            + attention(x, x, block.self_attn)
            + attention(x, text, block.text_attn)
            + attention(x, audio, block.audio_attn))
