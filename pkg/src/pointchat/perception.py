"""Perception unit: turns finished gestures into masks, extracted text, or
stroke drafts.

Clicks and strokes select regions via a pluggable segmentation backend (the
built-in one is a deterministic flood fill), clicks can route to an OCR
backend when the pending command asks for text, draws accumulate into an open
stroke draft, and drags record a displacement against the active mask.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from pointchat import kernels
from pointchat.config import EngineConfig
from pointchat.errors import SeedOutOfBounds
from pointchat.pointing import GestureKind, PointerEvent
from pointchat.raster import decode_image, encode_mask_png, norm_to_pixel
from pointchat.session import KIND_DRAFT, KIND_MASK, KIND_TEXT, SessionStore


@dataclass
class Mask:
    bits: np.ndarray                 # (H, W) bool
    source_image: str                # artifact id
    seed: tuple[int, int]            # pixel that produced it

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def validate(self, image: np.ndarray) -> None:
        if self.bits.shape != image.shape[:2]:
            raise ValueError("mask/image dimension mismatch")
        if not self.bits.any():
            raise ValueError("mask has no selected pixel")
        sx, sy = self.seed
        if not self.bits[sy, sx]:
            raise ValueError("seed pixel not selected")


@dataclass
class StrokeDraft:
    canvas_size: tuple[int, int]     # (width, height)
    base_image: Optional[str] = None
    strokes: list = field(default_factory=list)

    def to_json(self) -> bytes:
        doc = {"canvas_size": list(self.canvas_size), "base_image": self.base_image, "strokes": self.strokes}
        return json.dumps(doc, sort_keys=True).encode()

    @staticmethod
    def from_json(data: bytes) -> "StrokeDraft":
        doc = json.loads(data)
        return StrokeDraft(
            canvas_size=tuple(doc["canvas_size"]),
            base_image=doc.get("base_image"),
            strokes=doc["strokes"],
        )

    def validate(self) -> None:
        width, height = self.canvas_size
        for stroke in self.strokes:
            if not stroke["points"]:
                raise ValueError("empty stroke")
            for x, y in stroke["points"]:
                if not (0 <= x < width and 0 <= y < height):
                    raise ValueError(f"stroke vertex ({x}, {y}) outside {width}x{height} canvas")


class SegmenterBackend(Protocol):
    def segment(self, image: np.ndarray, seed: tuple[int, int]) -> np.ndarray: ...


class OcrBackend(Protocol):
    def read(self, image: np.ndarray, region: np.ndarray, *, image_ref: Optional[Path] = None) -> str: ...


class FloodFillSegmenter:
    """Default segmentation stand-in: the 4-connected color component at the seed."""

    def __init__(self, tolerance: float = 32.0):
        self.tolerance = tolerance

    def segment(self, image: np.ndarray, seed: tuple[int, int]) -> np.ndarray:
        return kernels.flood_fill(image, seed[0], seed[1], self.tolerance)


class SidecarOcr:
    """Fixture OCR backend: reads an annotation file stored next to the image
    artifact (<artifact path>.ocr.json, entries {box: [x0, y0, x1, y1], text}).
    Boxes are half-open pixel rectangles. Returns the entry whose box overlaps
    the most selected pixels, ties by entry order; empty string when nothing
    overlaps or no sidecar exists.
    """

    def read(self, image: np.ndarray, region: np.ndarray, *, image_ref: Optional[Path] = None) -> str:
        if image_ref is None:
            return ""
        sidecar = Path(str(image_ref) + ".ocr.json")
        if not sidecar.exists():
            return ""
        entries = json.loads(sidecar.read_text())
        best_text, best_overlap = "", 0
        for entry in entries:
            x0, y0, x1, y1 = entry["box"]
            overlap = int(region[y0:y1, x0:x1].sum())
            if overlap > best_overlap:
                best_text, best_overlap = entry["text"], overlap
        return best_text


@dataclass
class PerceptionResult:
    kind: str                        # mask | text | draft | drag
    mask_id: Optional[str] = None
    text: Optional[str] = None
    text_id: Optional[str] = None
    draft_id: Optional[str] = None
    drag: Optional[dict] = None      # {mask_id, dx, dy}
    new_artifacts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "mask_id": self.mask_id,
            "text": self.text,
            "text_id": self.text_id,
            "draft_id": self.draft_id,
            "drag": self.drag,
            "new_artifacts": list(self.new_artifacts),
        }


class PerceptionUnit:
    def __init__(
        self,
        store: SessionStore,
        config: EngineConfig | None = None,
        segmenter: SegmenterBackend | None = None,
        ocr: OcrBackend | None = None,
    ):
        self.store = store
        self.config = config or EngineConfig()
        self.segmenter = segmenter or FloodFillSegmenter(self.config.segment_tolerance)
        self.ocr = ocr or SidecarOcr()

    # -- region selection -----------------------------------------------------

    def segment_at(self, image: np.ndarray, seed: tuple[int, int], tolerance: float | None = None) -> np.ndarray:
        """Flood-fill component mask at a pixel seed; SeedOutOfBounds outside the image."""
        height, width = image.shape[:2]
        sx, sy = seed
        if not (0 <= sx < width and 0 <= sy < height):
            raise SeedOutOfBounds(f"seed ({sx}, {sy}) outside {width}x{height} image")
        if tolerance is not None and tolerance != self.config.segment_tolerance:
            return kernels.flood_fill(image, sx, sy, tolerance)
        return self.segmenter.segment(image, (sx, sy))

    def extract_text(self, image: np.ndarray, region: np.ndarray, image_ref: Optional[Path] = None) -> str:
        return self.ocr.read(image, region, image_ref=image_ref)

    # -- draft storage --------------------------------------------------------

    def store_stroke(self, session_id: str, strokes: Sequence[dict],
                     canvas_size: tuple[int, int], base_image: Optional[str] = None) -> str:
        """Append strokes to the session's open draft (creating one if needed).

        Content addressing keeps each stored draft immutable: every call writes
        the accumulated draft as a fresh artifact and repoints open_draft at it.
        """
        state = self.store.get(session_id)
        if state.open_draft is not None:
            draft = StrokeDraft.from_json(self.store.artifact_bytes(session_id, state.open_draft))
        else:
            draft = StrokeDraft(canvas_size=canvas_size, base_image=base_image)
        draft.strokes = list(draft.strokes) + [dict(s) for s in strokes]
        draft.validate()
        draft_id = self.store.add_artifact(session_id, draft.to_json(), KIND_DRAFT, producer="gesture")
        state.open_draft = draft_id
        self.store.save(session_id)
        return draft_id

    # -- gesture dispatch -----------------------------------------------------

    def handle_gesture(self, session_id: str, event: PointerEvent, want_text: bool = False) -> PerceptionResult:
        """Three-way handling of a finished gesture.

        Never mutates the source image artifact; all products are new artifacts.
        """
        image_id = event.target_artifact
        image_path = self.store.artifact_path(session_id, image_id)
        image = decode_image(image_path.read_bytes())
        height, width = image.shape[:2]
        state = self.store.get(session_id)

        if event.kind == GestureKind.CLICK:
            px, py = norm_to_pixel(event.samples[0].x, event.samples[0].y, width, height)
            bits = self.segment_at(image, (px, py))
            mask_id = self._store_mask(session_id, bits, image_id, seed=(px, py))
            state.active_mask = mask_id
            self.store.save(session_id)
            if want_text:
                text = self.extract_text(image, bits, image_ref=image_path)
                text_id = self.store.add_artifact(session_id, text.encode(), KIND_TEXT, producer="gesture")
                return PerceptionResult(kind="text", text=text, text_id=text_id,
                                        mask_id=mask_id, new_artifacts=[mask_id, text_id])
            return PerceptionResult(kind="mask", mask_id=mask_id, new_artifacts=[mask_id])

        if event.kind == GestureKind.STROKE:
            bits = np.zeros((height, width), dtype=bool)
            seen = set()
            for sample in event.samples[:: self.config.stroke_seed_stride]:
                seed = norm_to_pixel(sample.x, sample.y, width, height)
                if seed in seen:
                    continue
                seen.add(seed)
                bits |= self.segment_at(image, seed)
            mask_id = self._store_mask(session_id, bits, image_id)
            state.active_mask = mask_id
            self.store.save(session_id)
            return PerceptionResult(kind="mask", mask_id=mask_id, new_artifacts=[mask_id])

        if event.kind == GestureKind.DRAW:
            points = [list(norm_to_pixel(s.x, s.y, width, height)) for s in event.samples]
            stroke = {"points": points, "color": list(self.config.draw_color), "width": self.config.draw_width}
            draft_id = self.store_stroke(session_id, [stroke], canvas_size=(width, height), base_image=image_id)
            return PerceptionResult(kind="draft", draft_id=draft_id, new_artifacts=[draft_id])

        # drag: displacement against the active mask, consumed later by tools
        first, last = event.samples[0], event.samples[-1]
        fx, fy = norm_to_pixel(first.x, first.y, width, height)
        lx, ly = norm_to_pixel(last.x, last.y, width, height)
        drag = {"mask_id": state.active_mask, "dx": lx - fx, "dy": ly - fy}
        state.pending_drag = drag
        self.store.save(session_id)
        return PerceptionResult(kind="drag", drag=drag)

    def _store_mask(
        self,
        session_id: str,
        bits: np.ndarray,
        source_image: str,
        seed: Optional[tuple[int, int]] = None,
    ) -> str:
        meta = {"source_image": source_image}
        if seed is not None:
            meta["seed"] = [seed[0], seed[1]]
        return self.store.add_artifact(
            session_id, encode_mask_png(bits), KIND_MASK, producer="gesture", meta=meta
        )
