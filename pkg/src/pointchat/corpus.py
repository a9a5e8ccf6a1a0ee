"""Deterministic evaluation corpus: fixture images/videos plus trace files
covering the command families the rule pipeline must route perfectly.

The same builder writes the corpus committed in-tree and the temporary copies
tests create, so the two can never drift apart.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np

from pointchat.raster import encode_png

CLICK = [{"x": 130.5 / 256, "y": 130.5 / 256, "t_ms": 0.0}]

DRAW = [
    {"x": 0.20, "y": 0.20, "t_ms": 0.0},
    {"x": 0.40, "y": 0.35, "t_ms": 120.0},
    {"x": 0.60, "y": 0.50, "t_ms": 240.0},
    {"x": 0.80, "y": 0.65, "t_ms": 360.0},
]

FAMILIES: dict[str, list[dict]] = {
    "remove": [
        {"utterance": "remove the masked object", "tool": "remove_masked_object"},
        {"utterance": "remove the black dog near the table in the image", "tool": "remove_masked_object"},
        {"utterance": "remove the object by the masked region", "tool": "remove_masked_object"},
        {"utterance": "erase the masked object", "tool": "remove_masked_object"},
    ],
    "question": [
        {"utterance": "what is the background color in the masked region", "tool": "question_masked_object"},
        {"utterance": "how many cats are in this masked figure", "tool": "question_masked_object"},
        {"utterance": "what is in this masked figure", "tool": "question_masked_object"},
        {"utterance": "question the masked object", "tool": "question_masked_object"},
    ],
    "replace": [
        {"utterance": "replace the masked object with 'a red vase'", "tool": "replace_masked_object"},
        {"utterance": "replace the masked object with a new object", "tool": "replace_masked_object"},
        {"utterance": "replace it with 'a blue box'", "tool": "replace_masked_object"},
        {"utterance": "create a fancy image from the sketch and give it a title",
         "tool": "replace_masked_object", "gesture": "draw"},
    ],
    "caption": [
        {"utterance": "caption this photo", "tool": "caption_photo", "gesture": "none"},
        {"utterance": "caption this image", "tool": "caption_photo", "gesture": "none"},
        {"utterance": "describe this photo", "tool": "caption_photo", "gesture": "none"},
        {"utterance": "caption the image", "tool": "caption_photo", "gesture": "none"},
    ],
    "highlight": [
        {"utterance": "cut this video to a TikTok video based on a prompt",
         "tool": "video_highlight", "fixture": "video"},
        {"utterance": "cut this video to a tiktok video", "tool": "video_highlight", "fixture": "video"},
        {"utterance": "make a tiktok style highlight of this video", "tool": "video_highlight",
         "fixture": "video"},
        {"utterance": "cut a highlight from this video at 5 seconds", "tool": "video_highlight",
         "fixture": "video"},
    ],
}

NONSENSE = "flibber the gromp sideways"


def scene_image() -> np.ndarray:
    """256x256 blue background with a 60x60 red square: one flood-fillable
    object on a flood-fillable ground."""
    image = np.zeros((256, 256, 3), np.uint8)
    image[:] = (0, 0, 255)
    image[100:160, 100:160] = (255, 0, 0)
    return image


def clip_bundle(n_frames: int = 50, fps: int = 5) -> bytes:
    """Zip bundle: manifest.json plus one flat-gray frame per index."""
    def entry(name: str) -> zipfile.ZipInfo:
        # pinned timestamp so rebuilding the corpus is byte-for-byte stable
        return zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as bundle:
        manifest = {"fps": fps, "frames": [f"f{i:03d}.png" for i in range(n_frames)]}
        bundle.writestr(entry("manifest.json"), json.dumps(manifest, sort_keys=True))
        for i in range(n_frames):
            frame = np.full((16, 16, 3), (i * 5) % 256, np.uint8)
            bundle.writestr(entry(f"f{i:03d}.png"), encode_png(frame))
    return buf.getvalue()


def build_corpus(target_dir: str | Path) -> list[Path]:
    """Write fixtures and all trace files; returns the trace paths."""
    target_dir = Path(target_dir)
    fixtures = target_dir / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    (fixtures / "scene.png").write_bytes(encode_png(scene_image()))
    (fixtures / "clip.zip").write_bytes(clip_bundle())

    written = []
    for family, cases in FAMILIES.items():
        for index, case in enumerate(cases):
            path = target_dir / f"{family}_{index}.trace"
            path.write_text("\n".join(_trace_lines(f"{family}_{index}", family, case)) + "\n")
            written.append(path)
    clarify_path = target_dir / "clarify_0.trace"
    clarify_path.write_text("\n".join([
        json.dumps({"trace_version": 1, "name": "clarify_0", "family": "clarify"}),
        json.dumps({"action": "upload", "file": "fixtures/scene.png", "name": "scene.png"}),
        json.dumps({"action": "chat", "utterance": NONSENSE,
                    "expect": {"expected_status": "clarify"}}),
    ]) + "\n")
    written.append(clarify_path)
    return written


def _trace_lines(name: str, family: str, case: dict) -> list[str]:
    lines = [json.dumps({"trace_version": 1, "name": name, "family": family})]
    if case.get("fixture") == "video":
        lines.append(json.dumps({"action": "upload", "file": "fixtures/clip.zip", "name": "clip.zip"}))
    else:
        lines.append(json.dumps({"action": "upload", "file": "fixtures/scene.png", "name": "scene.png"}))
        gesture = case.get("gesture", "click")
        if gesture == "click":
            lines.append(json.dumps({"action": "pointer", "target": "scene.png", "samples": CLICK}))
        elif gesture == "draw":
            lines.append(json.dumps({
                "action": "pointer", "target": "scene.png", "mode_hint": "draw", "samples": DRAW,
            }))
    lines.append(json.dumps({
        "action": "chat",
        "utterance": case["utterance"],
        "expect": {"expected_tool": case["tool"], "expected_status": "ok"},
    }))
    return lines
