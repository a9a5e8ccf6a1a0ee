"""Deterministic built-in tools.

Each tool is a pure function over decoded payloads (arrays, strings,
manifests); artifact loading/storing happens in the dispatcher. These are
desk-scale stand-ins: a real segmentation/VQA/generation model attaches
through the external tool protocol and replaces the matching built-in.
"""

from __future__ import annotations

import math
from hashlib import sha256
from typing import Callable, Optional

import numpy as np

from pointchat import kernels
from pointchat.errors import (
    DimensionMismatch,
    EmptyComplement,
    EmptyMask,
    MalformedManifest,
    NothingToGenerate,
    TimestampOutOfRange,
)
from pointchat.perception import StrokeDraft
from pointchat.raster import nearest_color_name, rasterize_strokes
from pointchat.toolkit.descriptors import ArgKind, OutputKind, ToolArg, ToolDescriptor, ToolRegistry


def _check_mask(image: np.ndarray, mask: np.ndarray) -> None:
    if mask.shape != image.shape[:2]:
        raise DimensionMismatch(f"mask {mask.shape} vs image {image.shape[:2]}")


def remove_masked_object(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Erase the masked region by onion-peel inpainting from its boundary."""
    _check_mask(image, mask)
    if not mask.any():
        raise EmptyMask("mask selects nothing")
    if mask.all():
        raise EmptyComplement("mask covers the whole image")
    return kernels.inpaint(image, mask)


def question_masked_object(image: np.ndarray, mask: np.ndarray, question: str) -> str:
    """Template answers about the masked region.

    Color questions name the nearest basic color of the region's mean (the
    complement when the question says "background"); size questions give the
    selected-area percentage; anything else gets a stats sentence.
    """
    _check_mask(image, mask)
    q = question.lower()
    total = mask.size
    selected = int(mask.sum())
    if "color" in q or "colour" in q:
        region = ~mask if "background" in q else mask
        if not region.any():
            region = np.ones_like(mask)
        return nearest_color_name(image[region].mean(axis=0))
    if "how big" in q or "area" in q or "size" in q:
        return f"{100.0 * selected / total:.1f}%"
    if selected == 0:
        return "the masked region is empty"
    ys, xs = np.nonzero(mask)
    color = nearest_color_name(image[mask].mean(axis=0))
    return (
        f"the masked region covers {100.0 * selected / total:.1f}% of the image, "
        f"is mostly {color}, and spans pixels ({xs.min()}, {ys.min()}) to ({xs.max()}, {ys.max()})"
    )


def prompt_fill_color(prompt: str) -> tuple[int, int, int]:
    """Deterministic solid fill color derived from the prompt text."""
    digest = sha256(prompt.encode("utf-8")).digest()
    return digest[0], digest[1], digest[2]


def conditional_generation(
    prompt: str,
    image: Optional[np.ndarray] = None,
    mask: Optional[np.ndarray] = None,
    draft: Optional[StrokeDraft] = None,
    draft_base: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, str]:
    """Generate an image and a title.

    Draft mode rasterizes the open draft's strokes onto its base image (or a
    white canvas); mask mode fills the masked region with a color hashed from
    the prompt. The title is the prompt verbatim.
    """
    if draft is not None:
        width, height = draft.canvas_size
        if draft_base is not None:
            canvas = draft_base
        else:
            canvas = np.full((height, width, 3), 255, dtype=np.uint8)
        return rasterize_strokes(canvas, draft.strokes), prompt
    if image is not None and mask is not None:
        _check_mask(image, mask)
        out = image.copy()
        out[mask] = prompt_fill_color(prompt)
        return out, prompt
    raise NothingToGenerate("no open draft and no (image, mask) pair")


def caption_image(image: np.ndarray) -> str:
    height, width = image.shape[:2]
    color = nearest_color_name(image.reshape(-1, 3).mean(axis=0))
    return f"a {width}x{height} image, mostly {color}"


def validate_manifest(manifest: dict) -> tuple[float, list[str]]:
    if not isinstance(manifest, dict):
        raise MalformedManifest("manifest is not an object")
    fps = manifest.get("fps")
    frames = manifest.get("frames")
    if not isinstance(fps, (int, float)) or fps <= 0:
        raise MalformedManifest("manifest needs a positive fps")
    if not isinstance(frames, list) or not frames or not all(isinstance(f, str) for f in frames):
        raise MalformedManifest("manifest needs a non-empty frame list")
    return float(fps), list(frames)


def highlight_frame_range(fps: float, n_frames: int, timestamp: float, half_window: float) -> tuple[int, int]:
    """Inclusive frame index range covering [t - w, t + w], clamped to the video."""
    duration = n_frames / fps
    if not (0.0 <= timestamp <= duration):
        raise TimestampOutOfRange(f"t={timestamp} outside [0, {duration}]")
    t0 = max(0.0, timestamp - half_window)
    t1 = min(duration, timestamp + half_window)
    first = int(math.floor(t0 * fps))
    last = int(math.ceil(t1 * fps)) - 1
    return first, min(last, n_frames - 1)


def video_highlight(
    manifest: dict,
    timestamp: float,
    prompt: str,
    half_window: float = 2.0,
    frame_loader: Optional[Callable[[str], np.ndarray]] = None,
) -> tuple[dict, str]:
    """Cut a sub-manifest around the timestamp; frames are referenced, not
    copied. The interpretation text is the prompt plus a caption of the clip's
    middle frame (when a frame loader is supplied)."""
    fps, frames = validate_manifest(manifest)
    first, last = highlight_frame_range(fps, len(frames), timestamp, half_window)
    clip = {"fps": fps, "frames": frames[first : last + 1]}
    interpretation = prompt
    if frame_loader is not None:
        middle = clip["frames"][(len(clip["frames"]) - 1) // 2]
        interpretation = f"{prompt}: {caption_image(frame_loader(middle))}"
    return clip, interpretation


def default_registry() -> ToolRegistry:
    """The built-in tool set. Registration order doubles as selection
    tie-break order, so the most destructive tool comes first only because the
    canonical remove phrasing must win ties deterministically."""
    registry = ToolRegistry()
    registry.register(ToolDescriptor(
        name="remove_masked_object",
        description=(
            "Remove or erase the object covered by the masked region of the image "
            "and fill the hole it leaves. Trigger examples: remove the masked object; "
            "remove the object by the masked region."
        ),
        args=(ToolArg("image_path", ArgKind.IMAGE), ToolArg("mask_path", ArgKind.MASK)),
        output_kind=OutputKind.IMAGE,
    ))
    registry.register(ToolDescriptor(
        name="question_masked_object",
        description=(
            "Answer a question about the masked region of the image. Trigger examples: "
            "what is the background color in the masked region; how many cats are in "
            "this masked figure; what is in this masked figure."
        ),
        args=(
            ToolArg("image_path", ArgKind.IMAGE),
            ToolArg("mask_path", ArgKind.MASK),
            ToolArg("question", ArgKind.QUESTION),
        ),
        output_kind=OutputKind.TEXT,
    ))
    registry.register(ToolDescriptor(
        name="replace_masked_object",
        description=(
            "Replace the masked region of the image with new content described by a "
            "text prompt, or create a new image from the drawn sketch strokes and give "
            "the result a title. Trigger examples: replace the masked object with "
            "something; create a fancy image from my sketch."
        ),
        args=(
            ToolArg("image_path", ArgKind.IMAGE, required=False),
            ToolArg("mask_path", ArgKind.MASK, required=False),
            ToolArg("draft_path", ArgKind.DRAFT, required=False),
            ToolArg("prompt", ArgKind.PROMPT),
        ),
        output_kind=OutputKind.IMAGE,
    ))
    registry.register(ToolDescriptor(
        name="video_highlight",
        description=(
            "Cut a video into a short highlight clip around a timestamp and describe "
            "it, tiktok style. Trigger examples: cut this video to a tiktok video "
            "based on a prompt."
        ),
        args=(
            ToolArg("video_path", ArgKind.VIDEO),
            ToolArg("timestamp", ArgKind.TIMESTAMP, required=False),
            ToolArg("prompt", ArgKind.PROMPT),
        ),
        output_kind=OutputKind.VIDEO,
    ))
    registry.register(ToolDescriptor(
        name="caption_photo",
        description=(
            "Describe what an image or photo shows in one short sentence. "
            "Trigger examples: caption this photo."
        ),
        args=(ToolArg("image_path", ArgKind.IMAGE),),
        output_kind=OutputKind.TEXT,
    ))
    registry.register(ToolDescriptor(
        name="read_masked_text",
        description=(
            "Read the text written in the masked region of the image using character "
            "recognition. Trigger examples: read the masked text; what does the sign say."
        ),
        args=(ToolArg("image_path", ArgKind.IMAGE), ToolArg("mask_path", ArgKind.MASK)),
        output_kind=OutputKind.TEXT,
    ))
    return registry


def declares_text_from_region(descriptor: ToolDescriptor) -> bool:
    """True for tools whose whole job is producing text straight from a pointed
    region (the OCR routing trigger): text output, a mask input, and no
    separate question to answer."""
    kinds = {a.kind for a in descriptor.args}
    return (
        descriptor.output_kind == OutputKind.TEXT
        and ArgKind.MASK in kinds
        and ArgKind.QUESTION not in kinds
    )
