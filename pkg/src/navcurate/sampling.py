"""Training-sample construction: start drawing, waypoint extraction, arrival labels.

For each (accepted clip, landmark, draw) triple the builder draws a start
frame t relative to the goal frame t_g, then extracts the next
``horizon`` ground-plane waypoints in the frame of pose(t). A small
fraction of draws lands within ``arrival_window`` of the goal and is
labelled as an arrival case; ordinary draws start between ``min_offset``
and ``max_offset`` frames before the goal.

Randomness is reproducible regardless of scheduling: every draw gets its
own numpy Generator keyed by (seed, sha256(clip_id), landmark ordinal,
draw ordinal), so fanning the corpus build out per clip cannot change a
single sample.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields

import numpy as np

from .errors import GimbalDegenerate, Infeasible, OutOfBounds, ValidationError
from .filters import FilterVerdict
from .geometry import AxisConvention, DEFAULT_CONVENTION, to_ego_waypoint
from .io import LandmarkAnnotation, TrainingSample
from .segmentation import Clip

__all__ = ["SamplerConfig", "TrainingSample", "draw_start", "build_sample", "build_corpus"]


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs for start-time sampling and waypoint extraction."""

    history_len: int = 8
    horizon: int = 8
    min_offset: int = 10
    max_offset: int = 60
    arrival_window: int = 2
    arrival_fraction: float = 0.1
    waypoint_stride: int = 1
    draws_per_landmark: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.history_len < 1 or self.horizon < 1:
            raise ValidationError("history_len and horizon must be >= 1")
        if not 0 < self.min_offset <= self.max_offset:
            raise ValidationError(
                f"need 0 < min_offset <= max_offset, got {self.min_offset}, {self.max_offset}"
            )
        if not 0 <= self.arrival_window < self.min_offset:
            raise ValidationError("arrival_window must be in [0, min_offset)")
        if not (0.0 <= self.arrival_fraction <= 1.0):
            raise ValidationError(f"arrival_fraction must be in [0, 1], got {self.arrival_fraction!r}")
        if self.waypoint_stride < 1:
            raise ValidationError("waypoint_stride must be >= 1")
        if self.draws_per_landmark < 1:
            raise ValidationError("draws_per_landmark must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a non-negative 64-bit integer")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "SamplerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown SamplerConfig keys: {sorted(unknown)}")
        return cls(**data)


def draw_rng(seed: int, clip_id: str, landmark_ordinal: int, draw_ordinal: int) -> np.random.Generator:
    """Deterministic per-draw generator, independent of build scheduling."""
    digest = hashlib.sha256(clip_id.encode("utf-8")).digest()
    clip_key = int.from_bytes(digest[:8], "big")
    return np.random.default_rng([seed, clip_key, landmark_ordinal, draw_ordinal])


def draw_start(t_g: int, config: SamplerConfig, rng: np.random.Generator) -> int:
    """Draw a start frame t for a goal at frame t_g.

    With probability ``arrival_fraction`` t is uniform on
    [t_g - arrival_window, t_g]; otherwise uniform on
    [t_g - max_offset, t_g - min_offset], both clamped at frame 0.

    Raises:
        Infeasible: the non-arrival interval is empty after clamping
            (t_g < min_offset); the caller should skip this landmark.
    """
    lo = max(0, t_g - config.max_offset)
    hi = t_g - config.min_offset
    if hi < lo:
        raise Infeasible(f"no feasible start for goal frame {t_g} with min_offset {config.min_offset}")
    if rng.random() < config.arrival_fraction:
        return int(rng.integers(max(0, t_g - config.arrival_window), t_g + 1))
    return int(rng.integers(lo, hi + 1))


def build_sample(
    clip: Clip,
    landmark: LandmarkAnnotation,
    t: int,
    config: SamplerConfig,
    convention: AxisConvention = DEFAULT_CONVENTION,
    sample_id: str | None = None,
) -> TrainingSample:
    """Assemble the supervision tuple for start frame t.

    waypoint i is pose(t + (i+1)*stride)'s position expressed in the
    ground-plane frame of pose(t); history frames run back from t in
    stride steps, clamped at frame 0.

    Raises:
        OutOfBounds: the future horizon runs past the clip end.
        GimbalDegenerate: pose(t) has no defined yaw.
    """
    k = config.horizon
    stride = config.waypoint_stride
    if t < 0 or t + k * stride >= len(clip):
        raise OutOfBounds(
            f"start {t} with horizon {k} and stride {stride} exceeds clip of {len(clip)} frames"
        )
    reference = clip.pose(t)
    waypoints = tuple(
        to_ego_waypoint(reference, clip.positions[t + (i + 1) * stride], convention) for i in range(k)
    )
    history = tuple(max(0, t - (config.history_len - 1 - j) * stride) for j in range(config.history_len))
    t_g = landmark.goal_frame
    return TrainingSample(
        sample_id=sample_id or f"{clip.clip_id}:g{t_g}:t{t}",
        clip_id=clip.clip_id,
        instruction=landmark.instruction,
        t=t,
        t_g=t_g,
        history_frames=history,
        waypoints=waypoints,
        arrival=(t_g - t) <= config.arrival_window,
    )


def build_clip_samples(
    clip: Clip,
    landmarks: list[LandmarkAnnotation],
    config: SamplerConfig,
    convention: AxisConvention = DEFAULT_CONVENTION,
) -> tuple[list[TrainingSample], dict[str, int]]:
    """Samples for one accepted clip; landmark ordinals follow file order."""
    samples: list[TrainingSample] = []
    skipped = {"infeasible": 0, "out_of_bounds": 0, "gimbal_degenerate": 0, "goal_out_of_bounds": 0}
    for lm_idx, landmark in enumerate(landmarks):
        if landmark.goal_frame >= len(clip):
            skipped["goal_out_of_bounds"] += 1
            continue
        for draw in range(config.draws_per_landmark):
            rng = draw_rng(config.seed, clip.clip_id, lm_idx, draw)
            try:
                t = draw_start(landmark.goal_frame, config, rng)
            except Infeasible:
                skipped["infeasible"] += 1
                continue
            sample_id = f"{clip.clip_id}:{lm_idx:04d}:{draw:02d}"
            try:
                samples.append(build_sample(clip, landmark, t, config, convention, sample_id=sample_id))
            except OutOfBounds:
                skipped["out_of_bounds"] += 1
            except GimbalDegenerate:
                skipped["gimbal_degenerate"] += 1
    return samples, skipped


def build_corpus(
    clips: list[Clip],
    landmarks: list[LandmarkAnnotation],
    verdicts: list[FilterVerdict],
    config: SamplerConfig,
    convention: AxisConvention = DEFAULT_CONVENTION,
) -> tuple[list[TrainingSample], dict[str, int]]:
    """Build samples over every accepted clip.

    Returns the deterministically ordered sample list (sorted by clip id,
    then landmark ordinal, then draw ordinal) plus counts of skipped
    landmarks by reason. A verdict must exist for every clip.
    """
    verdict_map = {v.clip_id: v for v in verdicts}
    missing = [c.clip_id for c in clips if c.clip_id not in verdict_map]
    if missing:
        raise ValidationError(f"no filter verdict for clips: {missing[:5]}")
    by_clip: dict[str, list[LandmarkAnnotation]] = {}
    for lm in landmarks:
        by_clip.setdefault(lm.clip_id, []).append(lm)
    clip_ids = {c.clip_id for c in clips}
    skipped = {
        "infeasible": 0,
        "out_of_bounds": 0,
        "gimbal_degenerate": 0,
        "goal_out_of_bounds": 0,
        "unknown_clip": sum(1 for lm in landmarks if lm.clip_id not in clip_ids),
        "rejected_clip": 0,
    }
    samples: list[TrainingSample] = []
    for clip in sorted(clips, key=lambda c: c.clip_id):
        clip_landmarks = by_clip.get(clip.clip_id, [])
        if not verdict_map[clip.clip_id].accepted:
            skipped["rejected_clip"] += len(clip_landmarks)
            continue
        clip_samples, clip_skips = build_clip_samples(clip, clip_landmarks, config, convention)
        samples.extend(clip_samples)
        for key, count in clip_skips.items():
            skipped[key] += count
    return samples, skipped
