"""Gesture capture types and classification.

Clients send raw pointer traces in normalized [0,1] coordinates; this module
turns them into one of four gesture kinds (click, stroke, drag, draw). All
functions here are pure: classification depends only on the trace, the mode
hint, and the session's pointer context snapshot.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from pointchat.errors import DragWithoutSelection, EmptyTrace, UnknownTarget
from pointchat.raster import norm_to_pixel


class GestureKind(str, enum.Enum):
    CLICK = "click"
    STROKE = "stroke"
    DRAG = "drag"
    DRAW = "draw"


class ModeHint(str, enum.Enum):
    AUTO = "auto"
    SELECT = "select"
    DRAG = "drag"
    DRAW = "draw"


@dataclass(frozen=True)
class PointerSample:
    x: float
    y: float
    t_ms: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"sample out of range: ({self.x}, {self.y})")
        if self.t_ms < 0:
            raise ValueError(f"negative sample time: {self.t_ms}")


@dataclass(frozen=True)
class PointerEvent:
    kind: GestureKind
    samples: tuple[PointerSample, ...]
    target_artifact: str
    mode_hint: ModeHint = ModeHint.AUTO


@dataclass
class PointerContext:
    """Snapshot of the session state classification may consult."""

    target_artifact: str
    image_size: tuple[int, int]                 # (width, height) of the target
    active_mask: Optional[np.ndarray] = None    # (H, W) bool raster, or None
    known_artifacts: frozenset = field(default_factory=frozenset)


def parse_samples(raw: Sequence[dict]) -> tuple[PointerSample, ...]:
    """Validate a wire-form sample list: ranges and monotone non-decreasing
    t_ms. Violations name the exact offending field (e.g. "samples[0].x")."""
    if not raw:
        raise EmptyTrace("gesture has no samples")
    samples = []
    prev_t = -1.0
    for i, item in enumerate(raw):
        for key in ("x", "y", "t_ms"):
            if not isinstance(item, dict) or key not in item:
                raise ValueError(f"samples[{i}].{key} is missing")
            try:
                float(item[key])
            except (TypeError, ValueError):
                raise ValueError(f"samples[{i}].{key} is not a number") from None
        x, y, t = float(item["x"]), float(item["y"]), float(item["t_ms"])
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"samples[{i}].x out of range [0, 1]")
        if not 0.0 <= y <= 1.0:
            raise ValueError(f"samples[{i}].y out of range [0, 1]")
        if t < 0:
            raise ValueError(f"samples[{i}].t_ms is negative")
        if t < prev_t:
            raise ValueError(f"samples[{i}].t_ms decreases")
        prev_t = t
        samples.append(PointerSample(x, y, t))
    return tuple(samples)


def trace_extent(samples: Sequence[PointerSample]) -> float:
    """Maximum pairwise displacement over the trace, in normalized units."""
    if len(samples) < 2:
        return 0.0
    pts = np.array([(s.x, s.y) for s in samples])
    best = 0.0
    # chunked to bound memory on long traces
    for start in range(0, len(pts), 512):
        chunk = pts[start : start + 512]
        d = chunk[:, None, :] - pts[None, :, :]
        best = max(best, float(np.sqrt((d * d).sum(axis=2)).max()))
    return best


def trace_duration_ms(samples: Sequence[PointerSample]) -> float:
    return samples[-1].t_ms - samples[0].t_ms


def _in_active_mask(sample: PointerSample, context: PointerContext) -> bool:
    if context.active_mask is None:
        return False
    width, height = context.image_size
    px, py = norm_to_pixel(sample.x, sample.y, width, height)
    return bool(context.active_mask[py, px])


def classify_gesture(
    samples: Sequence[PointerSample],
    mode_hint: ModeHint,
    context: PointerContext,
    *,
    click_extent: float = 0.01,
    click_max_ms: float = 500.0,
    auto_drag: bool = True,
) -> PointerEvent:
    """Classify a finished trace into exactly one gesture kind.

    A non-auto hint wins: select resolves to click or stroke by extent, drag
    and draw force their kinds. Under auto, precedence is drag (trace starts
    inside the active mask and moved past the click extent), then click, then
    stroke; draw is never inferred.
    """
    samples = tuple(samples)
    if not samples:
        raise EmptyTrace("gesture has no samples")
    if context.known_artifacts and context.target_artifact not in context.known_artifacts:
        raise UnknownTarget(f"unknown target artifact '{context.target_artifact}'")

    extent = trace_extent(samples)
    is_click = extent <= click_extent and trace_duration_ms(samples) <= click_max_ms

    if mode_hint == ModeHint.DRAW:
        kind = GestureKind.DRAW
    elif mode_hint == ModeHint.DRAG:
        if context.active_mask is None:
            raise DragWithoutSelection("drag requires an active mask")
        kind = GestureKind.DRAG
    elif mode_hint == ModeHint.SELECT:
        # an explicit select hint resolves on extent alone; dwell time is moot
        kind = GestureKind.CLICK if extent <= click_extent else GestureKind.STROKE
    else:  # auto
        if auto_drag and extent > click_extent and _in_active_mask(samples[0], context):
            kind = GestureKind.DRAG
        elif is_click:
            kind = GestureKind.CLICK
        else:
            kind = GestureKind.STROKE

    return PointerEvent(kind=kind, samples=samples, target_artifact=context.target_artifact, mode_hint=mode_hint)
