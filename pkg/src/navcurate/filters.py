"""Robot-compatibility rejection rules for clips.

Three independent checks, composed by :func:`run_filters`:

- pitch_range: peak-to-peak per-frame camera pitch over the clip must not
  exceed the configured range.
- view_divergence: over a sliding window, the angle between where the
  camera looks (yaw at the window's center frame) and where the agent
  actually moves (ground-plane displacement across the window) must not
  exceed the configured maximum. Windows that move less than the minimum
  displacement, or whose center yaw is gimbal-degenerate, are skipped so
  standing still never triggers a rejection.
- crowd_density: the number of frames whose person count exceeds the
  crowd size threshold must not exceed the frame threshold.

All thresholds fail only on strict exceedance: a range, divergence or
count exactly at its threshold passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import TooShort, ValidationError
from .geometry import AxisConvention, DEFAULT_CONVENTION, normalize_angle_deg, pitch_many, yaw_many
from .io import DetectionFrame
from .segmentation import Clip

__all__ = [
    "FilterConfig",
    "FilterVerdict",
    "REASON_PITCH",
    "REASON_DIVERGENCE",
    "REASON_CROWD",
    "check_pitch",
    "check_divergence",
    "check_crowd",
    "run_filters",
    "slice_detections",
]

REASON_PITCH = "pitch_range"
REASON_DIVERGENCE = "view_divergence"
REASON_CROWD = "crowd_density"


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for the three compatibility rules."""

    pitch_range_max_deg: float = 15.0
    divergence_max_deg: float = 60.0
    window_seconds: float = 1.0
    min_window_displacement_m: float = 0.5
    crowd_count_threshold: int = 5
    crowd_frame_threshold: int = 3
    person_label: str = "person"
    person_score_min: float = 0.5

    def __post_init__(self):
        for name in (
            "pitch_range_max_deg",
            "divergence_max_deg",
            "window_seconds",
            "min_window_displacement_m",
            "crowd_count_threshold",
            "crowd_frame_threshold",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive, got {value!r}")
        if not (0.0 <= self.person_score_min <= 1.0):
            raise ValidationError(f"person_score_min must be in [0, 1], got {self.person_score_min!r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "FilterConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown FilterConfig keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class FilterVerdict:
    """Per-clip outcome: accepted iff no rule fired; diagnostics always complete."""

    clip_id: str
    accepted: bool
    reasons: tuple[str, ...]
    diagnostics: dict = field(compare=False)

    def __post_init__(self):
        if self.accepted != (len(self.reasons) == 0):
            raise ValidationError("accepted must be equivalent to an empty reason set")
        object.__setattr__(self, "reasons", tuple(sorted(self.reasons)))

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "accepted": self.accepted,
            "reasons": list(self.reasons),
            "diagnostics": dict(self.diagnostics),
        }


def _window_frames(config: FilterConfig, fps: float) -> int:
    # A window is w consecutive poses (w-1 frame intervals); floor of 2
    # keeps the displacement span nonzero at very low frame rates.
    return max(2, int(round(config.window_seconds * fps)))


def check_pitch(
    clip: Clip,
    config: FilterConfig,
    convention: AxisConvention = DEFAULT_CONVENTION,
) -> tuple[bool, float]:
    """Peak-to-peak pitch over the clip vs the configured range.

    Returns (passed, pitch_range_deg).
    """
    pitch = pitch_many(clip.quaternions, convention)
    pitch_range = float(pitch.max() - pitch.min())
    return pitch_range <= config.pitch_range_max_deg, pitch_range


def check_divergence(
    clip: Clip,
    config: FilterConfig,
    convention: AxisConvention = DEFAULT_CONVENTION,
) -> tuple[bool, float]:
    """Worst view-vs-motion misalignment over all sliding windows.

    Returns (passed, max_divergence_deg); the diagnostic is 0.0 when no
    window moved far enough to measure.

    Raises:
        TooShort: the clip has fewer poses than one window.
    """
    w = _window_frames(config, clip.fps)
    n = len(clip)
    if n < w:
        raise TooShort(f"clip {clip.clip_id!r} has {n} frames, shorter than one {w}-frame window")
    yaw = yaw_many(clip.quaternions, convention)
    delta = clip.positions[w - 1 :] - clip.positions[: n - w + 1]
    e1, e2 = convention.ground_axes
    dx = delta @ e1
    dy = delta @ e2
    displacement = np.hypot(dx, dy)
    view = yaw[(w - 1) // 2 : (w - 1) // 2 + n - w + 1]
    moving = displacement >= config.min_window_displacement_m
    valid = moving & ~np.isnan(view)
    if not np.any(valid):
        return True, 0.0
    bearing = np.degrees(np.arctan2(dy[valid], dx[valid]))
    divergence = np.abs(normalize_angle_deg(view[valid] - bearing))
    max_divergence = float(divergence.max())
    return max_divergence <= config.divergence_max_deg, max_divergence


def check_crowd(
    clip: Clip,
    detections: list[DetectionFrame],
    config: FilterConfig,
) -> tuple[bool, int]:
    """Count clip frames whose person tally exceeds the crowd threshold.

    Detection frames are clip-local; out-of-range entries are ignored
    (run_filters reports how many). Returns (passed, crowded_frame_count).
    """
    n = len(clip)
    crowded = 0
    for df in detections:
        if not 0 <= df.frame < n:
            continue
        count = sum(
            1 for d in df.detections if d.label == config.person_label and d.score >= config.person_score_min
        )
        if count > config.crowd_count_threshold:
            crowded += 1
    return crowded <= config.crowd_frame_threshold, crowded


def run_filters(
    clip: Clip,
    detections: list[DetectionFrame],
    config: FilterConfig,
    convention: AxisConvention = DEFAULT_CONVENTION,
) -> FilterVerdict:
    """Evaluate all three rules (never short-circuits) and compose a verdict."""
    reasons = []
    pitch_ok, pitch_range = check_pitch(clip, config, convention)
    if not pitch_ok:
        reasons.append(REASON_PITCH)
    try:
        div_ok, max_divergence = check_divergence(clip, config, convention)
    except TooShort:
        div_ok, max_divergence = False, float("nan")
    if not div_ok:
        reasons.append(REASON_DIVERGENCE)
    crowd_ok, crowded_frames = check_crowd(clip, detections, config)
    if not crowd_ok:
        reasons.append(REASON_CROWD)
    ignored = sum(1 for df in detections if not 0 <= df.frame < len(clip))
    return FilterVerdict(
        clip_id=clip.clip_id,
        accepted=not reasons,
        reasons=tuple(reasons),
        diagnostics={
            "pitch_range_deg": pitch_range,
            "max_divergence_deg": max_divergence,
            "crowded_frame_count": crowded_frames,
            "ignored_detection_frames": ignored,
        },
    )


def slice_detections(detections: list[DetectionFrame], clip: Clip) -> list[DetectionFrame]:
    """Select source-indexed detection frames covering a clip, re-indexed clip-local."""
    lo = clip.start_frame
    hi = clip.start_frame + len(clip)
    return [
        DetectionFrame(df.frame - lo, df.detections) for df in detections if lo <= df.frame < hi
    ]
