"""Per-clip conditioning assembly and stitching of generated clips.

A chain run supplies every clip with the same pivotal reference frame plus,
from the second clip on, the tail of the previous clip, optionally passed
through threshold-aware replacement. Stitching keeps the first occurrence of
overlapping frames and renumbers the result consecutively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .codebook import Codebook, project_tokens
from .core import (
    DEFAULT_CLIP_LEN,
    DimensionMismatchError,
    LatentClip,
    LatentFrame,
)

# Training-time constant, recorded for documentation only: the overlap
# conditioning scheme is sampled with this probability when the full model is
# trained. Inference (everything in this package) always honors
# ChainConfig.use_overlap instead.
TRAINING_OVERLAP_PROBABILITY = 0.5


@dataclass(frozen=True)
class ChainConfig:
    """Chain-run parameters.

    clip_latent_len is the latent frame count T of each generated clip;
    overlap is how many trailing frames of clip n-1 condition clip n;
    tau is the replacement threshold applied to those tail frames when
    use_replacement is on. See TRAINING_OVERLAP_PROBABILITY for the
    training-time constant that this config deliberately does not model.
    """

    clip_latent_len: int = DEFAULT_CLIP_LEN
    overlap: int = 2
    num_clips: int = 1
    tau: float = 0.0
    use_replacement: bool = True
    use_overlap: bool = True

    def __post_init__(self):
        if self.clip_latent_len < 1:
            raise ValueError(
                f"clip_latent_len must be >= 1, got {self.clip_latent_len}")
        if self.overlap < 0:
            raise ValueError(f"overlap must be >= 0, got {self.overlap}")
        if self.overlap >= self.clip_latent_len:
            raise ValueError(
                f"overlap ({self.overlap}) must be smaller than "
                f"clip_latent_len ({self.clip_latent_len})")
        if self.num_clips < 1:
            raise ValueError(f"num_clips must be >= 1, got {self.num_clips}")
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValueError(f"tau must be finite and >= 0, got {self.tau}")


@dataclass(frozen=True, eq=False)
class ConditioningBundle:
    """Everything one clip generation receives.

    overlap_tail is empty for clip 0 and holds the (possibly projected) last
    O frames of the previous clip otherwise. clipped_fraction records how
    many tail tokens the replacement step moved. audio_window and
    text_handle are opaque pass-throughs for the generator.
    """

    pivotal: LatentFrame
    overlap_tail: tuple[LatentFrame, ...]
    clip_index: int
    clipped_fraction: float = 0.0
    audio_window: object | None = None
    text_handle: object | None = None


@dataclass(frozen=True, eq=False)
class ChainResult:
    """Stitched long sequence plus per-clip bookkeeping.

    clip_boundaries holds (start, end) with end exclusive, indexing into
    sequence; replacement_stats holds each clip's conditioning
    clipped-token fraction (0.0 for clip 0).
    """

    sequence: tuple[LatentFrame, ...]
    clip_boundaries: tuple[tuple[int, int], ...]
    replacement_stats: tuple[float, ...]


def make_pivotal(reference: LatentFrame) -> LatentFrame:
    """Tag a reference frame as the pivotal frame (index 0, same tokens).

    The same pivotal is handed to every clip of a chain run and is never
    projected through the codebook.
    """
    return LatentFrame(tokens=reference.tokens, frame_index=0)


def assemble_conditioning(pivotal: LatentFrame, prev_clip: LatentClip | None,
                          cb: Codebook | None, cfg: ChainConfig,
                          clip_index: int) -> ConditioningBundle:
    """Build the conditioning bundle for one clip.

    Clip 0 gets an empty tail. Later clips get the last cfg.overlap frames
    of prev_clip, each token projected through threshold-aware replacement
    when cfg.use_replacement is set.
    """
    if clip_index < 0:
        raise ValueError(f"clip_index must be >= 0, got {clip_index}")
    if clip_index == 0:
        if prev_clip is not None:
            raise ValueError("clip 0 takes no previous clip")
        return ConditioningBundle(pivotal=pivotal, overlap_tail=(),
                                  clip_index=0)
    if prev_clip is None:
        raise ValueError(f"clip {clip_index} needs the previous clip")
    if prev_clip.length < cfg.overlap:
        raise ValueError(
            f"previous clip has {prev_clip.length} frames, "
            f"need at least overlap={cfg.overlap}")
    if not cfg.use_overlap or cfg.overlap == 0:
        return ConditioningBundle(pivotal=pivotal, overlap_tail=(),
                                  clip_index=clip_index)
    tail = prev_clip.frames[prev_clip.length - cfg.overlap:]
    if not cfg.use_replacement:
        return ConditioningBundle(pivotal=pivotal, overlap_tail=tail,
                                  clip_index=clip_index)
    if cb is None:
        raise ValueError("use_replacement needs a codebook")
    projected = []
    clipped_tokens = 0
    total_tokens = 0
    for f in tail:
        out, clipped, _, _ = project_tokens(f.tokens, cb, cfg.tau)
        projected.append(LatentFrame(tokens=out, frame_index=f.frame_index))
        clipped_tokens += int(clipped.sum())
        total_tokens += clipped.shape[0]
    frac = clipped_tokens / total_tokens if total_tokens else 0.0
    return ConditioningBundle(pivotal=pivotal, overlap_tail=tuple(projected),
                              clip_index=clip_index, clipped_fraction=frac)


def stitch(clips: list[LatentClip] | tuple[LatentClip, ...], cfg: ChainConfig,
           replacement_stats: tuple[float, ...] | None = None) -> ChainResult:
    """Merge clips into one sequence, dropping regenerated overlap frames.

    Clip 0 contributes all T frames; with use_overlap on, every later clip
    contributes frames overlap..T-1 (its first overlap frames re-cover
    ground clip n-1 already produced). Frames are renumbered consecutively.
    """
    clips = tuple(clips)
    if not clips:
        raise ValueError("stitch needs at least one clip")
    t = cfg.clip_latent_len
    shape = clips[0].frames[0].tokens.shape
    for i, clip in enumerate(clips):
        if clip.length != t:
            raise ValueError(
                f"clip {i} has {clip.length} frames, expected {t}")
        if clip.frames[0].tokens.shape != shape:
            raise DimensionMismatchError(
                f"clip {i} token shape {clip.frames[0].tokens.shape} "
                f"differs from clip 0 shape {shape}")
    if replacement_stats is None:
        replacement_stats = (0.0,) * len(clips)
    if len(replacement_stats) != len(clips):
        raise ValueError("replacement_stats length must match clip count")
    sequence: list[LatentFrame] = []
    boundaries: list[tuple[int, int]] = []
    for i, clip in enumerate(clips):
        start = 0 if i == 0 or not cfg.use_overlap else cfg.overlap
        lo = len(sequence)
        for f in clip.frames[start:]:
            sequence.append(LatentFrame(tokens=f.tokens,
                                        frame_index=len(sequence)))
        boundaries.append((lo, len(sequence)))
    return ChainResult(sequence=tuple(sequence),
                       clip_boundaries=tuple(boundaries),
                       replacement_stats=tuple(float(v)
                                               for v in replacement_stats))


def chain_generate(generator: Callable[[ConditioningBundle], LatentClip],
                   reference: LatentFrame, cb: Codebook | None,
                   cfg: ChainConfig) -> ChainResult:
    """Run the full chain: assemble conditioning, generate, stitch.

    The generator must return a LatentClip of exactly cfg.clip_latent_len
    frames; anything else raises with the offending clip index named.
    """
    pivotal = make_pivotal(reference)
    clips: list[LatentClip] = []
    stats: list[float] = []
    prev: LatentClip | None = None
    for ci in range(cfg.num_clips):
        bundle = assemble_conditioning(pivotal, prev, cb, cfg, ci)
        clip = generator(bundle)
        if not isinstance(clip, LatentClip):
            raise TypeError(
                f"generator returned {type(clip).__name__} for clip {ci}")
        if clip.length != cfg.clip_latent_len:
            raise ValueError(
                f"generator returned {clip.length} frames for clip {ci}, "
                f"expected {cfg.clip_latent_len}")
        clips.append(clip)
        stats.append(bundle.clipped_fraction)
        prev = clip
    return stitch(clips, cfg, replacement_stats=tuple(stats))
