"""Perception unit: gestures become masks, extracted text, stroke drafts, or
pending drags."""

import json

import numpy as np
import pytest

from pointchat.config import EngineConfig
from pointchat.errors import SeedOutOfBounds
from pointchat.perception import Mask, PerceptionUnit, SidecarOcr, StrokeDraft
from pointchat.pointing import GestureKind, ModeHint, PointerEvent, PointerSample
from pointchat.raster import decode_mask_png, encode_png
from pointchat.session import KIND_IMAGE, SessionStore


@pytest.fixture()
def store(tmp_path):
    return SessionStore(tmp_path / "sessions")


@pytest.fixture()
def unit(store):
    return PerceptionUnit(store, EngineConfig())


@pytest.fixture()
def scene(store, scene_array):
    sid = store.create_session()
    image_id = store.add_artifact(
        sid, encode_png(scene_array), KIND_IMAGE, producer="upload", name="scene.png"
    )
    return {"sid": sid, "image_id": image_id, "array": scene_array}


def _event(kind, points, target, hint=ModeHint.AUTO, size=256):
    samples = tuple(
        PointerSample((px + 0.5) / size, (py + 0.5) / size, float(i) * 10)
        for i, (px, py) in enumerate(points)
    )
    return PointerEvent(kind=kind, samples=samples, target_artifact=target, mode_hint=hint)


# -- region selection ---------------------------------------------------------


def test_click_selects_the_color_component(unit, scene):
    result = unit.handle_gesture(
        scene["sid"], _event(GestureKind.CLICK, [(130, 130)], scene["image_id"])
    )
    assert result.kind == "mask"
    bits = decode_mask_png(unit.store.artifact_bytes(scene["sid"], result.mask_id))
    expected = np.zeros((256, 256), bool)
    expected[100:160, 100:160] = True
    assert np.array_equal(bits, expected)


def test_click_records_source_and_seed_in_mask_meta(unit, scene):
    result = unit.handle_gesture(
        scene["sid"], _event(GestureKind.CLICK, [(130, 130)], scene["image_id"])
    )
    record = unit.store.get(scene["sid"]).artifacts[result.mask_id]
    assert record.meta["source_image"] == scene["image_id"]
    assert record.meta["seed"] == [130, 130]


def test_click_sets_the_active_mask(unit, scene):
    result = unit.handle_gesture(
        scene["sid"], _event(GestureKind.CLICK, [(130, 130)], scene["image_id"])
    )
    assert unit.store.get(scene["sid"]).active_mask == result.mask_id


def test_segment_at_rejects_out_of_bounds_seed(unit, scene):
    with pytest.raises(SeedOutOfBounds):
        unit.segment_at(scene["array"], (256, 10))
    with pytest.raises(SeedOutOfBounds):
        unit.segment_at(scene["array"], (-1, 10))


def test_stroke_unions_components_along_the_path(store):
    # Two separated squares on white; a stroke crossing both selects their union.
    unit = PerceptionUnit(store, EngineConfig(stroke_seed_stride=1))
    image = np.full((64, 64, 3), 255, np.uint8)
    image[10:20, 10:20] = (200, 0, 0)
    image[40:50, 40:50] = (0, 200, 0)
    sid = store.create_session()
    image_id = store.add_artifact(sid, encode_png(image), KIND_IMAGE, producer="upload")
    event = _event(GestureKind.STROKE, [(15, 15), (45, 45)], image_id, size=64)
    result = unit.handle_gesture(sid, event)
    bits = decode_mask_png(store.artifact_bytes(sid, result.mask_id))
    expected = np.zeros((64, 64), bool)
    expected[10:20, 10:20] = True
    expected[40:50, 40:50] = True
    assert np.array_equal(bits, expected)


def test_stroke_subsamples_seeds_by_stride(store, scene_array):
    calls = []

    class CountingSegmenter:
        def segment(self, image, seed):
            calls.append(seed)
            return np.zeros(image.shape[:2], bool) | (image[..., 0] == 255)

    unit = PerceptionUnit(store, EngineConfig(stroke_seed_stride=4), segmenter=CountingSegmenter())
    sid = store.create_session()
    image_id = store.add_artifact(sid, encode_png(scene_array), KIND_IMAGE, producer="upload")
    points = [(110 + i, 110) for i in range(12)]  # 12 samples, stride 4 -> 3 seeds
    unit.handle_gesture(sid, _event(GestureKind.STROKE, points, image_id))
    assert calls == [(110, 110), (114, 110), (118, 110)]


def test_stroke_skips_duplicate_seeds(store, scene_array):
    calls = []

    class CountingSegmenter:
        def segment(self, image, seed):
            calls.append(seed)
            return image[..., 0] == 255

    unit = PerceptionUnit(store, EngineConfig(stroke_seed_stride=1), segmenter=CountingSegmenter())
    sid = store.create_session()
    image_id = store.add_artifact(sid, encode_png(scene_array), KIND_IMAGE, producer="upload")
    points = [(120, 120), (120, 120), (121, 120)]
    unit.handle_gesture(sid, _event(GestureKind.STROKE, points, image_id))
    assert calls == [(120, 120), (121, 120)]


# -- text extraction ----------------------------------------------------------


def _write_sidecar(store, sid, image_id, entries):
    path = store.artifact_path(sid, image_id)
    (path.parent / (path.name + ".ocr.json")).write_text(json.dumps(entries))


def test_click_with_want_text_reads_the_overlapping_annotation(unit, scene):
    _write_sidecar(
        unit.store, scene["sid"], scene["image_id"],
        [
            {"box": [0, 0, 50, 50], "text": "corner label"},
            {"box": [100, 100, 160, 160], "text": "EXIT"},
        ],
    )
    result = unit.handle_gesture(
        scene["sid"],
        _event(GestureKind.CLICK, [(130, 130)], scene["image_id"]),
        want_text=True,
    )
    assert result.kind == "text"
    assert result.text == "EXIT"
    assert unit.store.artifact_bytes(scene["sid"], result.text_id) == b"EXIT"
    # The mask artifact is produced alongside the text.
    assert result.mask_id in result.new_artifacts
    assert result.text_id in result.new_artifacts


def test_want_text_with_no_sidecar_returns_empty_text(unit, scene):
    result = unit.handle_gesture(
        scene["sid"],
        _event(GestureKind.CLICK, [(130, 130)], scene["image_id"]),
        want_text=True,
    )
    assert result.kind == "text"
    assert result.text == ""


def test_sidecar_ocr_picks_largest_overlap_and_breaks_ties_by_order():
    ocr = SidecarOcr()
    region = np.zeros((40, 40), bool)
    region[0:10, 0:10] = True

    # Exercise the selection logic directly on a temp sidecar.
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        ref = Path(d) / "img.png"
        ref.write_bytes(b"")
        entries = [
            {"box": [0, 0, 5, 10], "text": "half"},       # 50 pixels
            {"box": [0, 0, 10, 10], "text": "full"},      # 100 pixels
            {"box": [0, 0, 10, 10], "text": "also-full"}, # tied, later -> loses
            {"box": [20, 20, 30, 30], "text": "outside"}, # 0 pixels
        ]
        (Path(d) / "img.png.ocr.json").write_text(json.dumps(entries))
        assert ocr.read(np.zeros((40, 40, 3), np.uint8), region, image_ref=ref) == "full"


def test_sidecar_ocr_returns_empty_without_reference():
    ocr = SidecarOcr()
    assert ocr.read(np.zeros((4, 4, 3), np.uint8), np.ones((4, 4), bool)) == ""


# -- drafts -------------------------------------------------------------------


def test_draw_opens_a_draft_with_pixel_points(unit, scene):
    result = unit.handle_gesture(
        scene["sid"], _event(GestureKind.DRAW, [(10, 10), (20, 15)], scene["image_id"])
    )
    assert result.kind == "draft"
    draft = StrokeDraft.from_json(unit.store.artifact_bytes(scene["sid"], result.draft_id))
    assert draft.canvas_size == (256, 256)
    assert draft.base_image == scene["image_id"]
    assert draft.strokes[0]["points"] == [[10, 10], [20, 15]]
    assert unit.store.get(scene["sid"]).open_draft == result.draft_id


def test_second_draw_accumulates_into_a_fresh_immutable_draft(unit, scene):
    first = unit.handle_gesture(
        scene["sid"], _event(GestureKind.DRAW, [(10, 10), (20, 15)], scene["image_id"])
    )
    second = unit.handle_gesture(
        scene["sid"], _event(GestureKind.DRAW, [(30, 30), (40, 40)], scene["image_id"])
    )
    assert first.draft_id != second.draft_id
    old = StrokeDraft.from_json(unit.store.artifact_bytes(scene["sid"], first.draft_id))
    assert len(old.strokes) == 1  # the earlier artifact is untouched
    new = StrokeDraft.from_json(unit.store.artifact_bytes(scene["sid"], second.draft_id))
    assert len(new.strokes) == 2
    assert unit.store.get(scene["sid"]).open_draft == second.draft_id


def test_store_stroke_rejects_vertices_outside_the_canvas(unit, store):
    sid = store.create_session()
    with pytest.raises(ValueError, match="outside"):
        unit.store_stroke(
            sid, [{"points": [[5, 70]], "color": [0, 0, 0], "width": 3}], canvas_size=(64, 64)
        )


def test_stroke_draft_json_round_trip():
    draft = StrokeDraft(
        canvas_size=(32, 48),
        base_image="abc_image.png",
        strokes=[{"points": [[1, 2], [3, 4]], "color": [255, 0, 0], "width": 5}],
    )
    restored = StrokeDraft.from_json(draft.to_json())
    assert restored == draft


# -- drags --------------------------------------------------------------------


def test_drag_records_displacement_against_the_active_mask(unit, scene):
    click = unit.handle_gesture(
        scene["sid"], _event(GestureKind.CLICK, [(130, 130)], scene["image_id"])
    )
    result = unit.handle_gesture(
        scene["sid"], _event(GestureKind.DRAG, [(130, 130), (170, 150)], scene["image_id"])
    )
    assert result.kind == "drag"
    assert result.drag == {"mask_id": click.mask_id, "dx": 40, "dy": 20}
    assert unit.store.get(scene["sid"]).pending_drag == result.drag


# -- mask invariants ----------------------------------------------------------


def test_mask_validate_accepts_a_consistent_mask(scene_array):
    bits = np.zeros((256, 256), bool)
    bits[100:160, 100:160] = True
    Mask(bits=bits, source_image="x", seed=(130, 130)).validate(scene_array)


def test_mask_validate_rejects_shape_mismatch(scene_array):
    with pytest.raises(ValueError, match="dimension"):
        Mask(bits=np.ones((4, 4), bool), source_image="x", seed=(0, 0)).validate(scene_array)


def test_mask_validate_rejects_empty_and_unseeded_masks(scene_array):
    empty = np.zeros((256, 256), bool)
    with pytest.raises(ValueError, match="no selected"):
        Mask(bits=empty, source_image="x", seed=(0, 0)).validate(scene_array)
    off_seed = empty.copy()
    off_seed[0, 0] = True
    with pytest.raises(ValueError, match="seed"):
        Mask(bits=off_seed, source_image="x", seed=(5, 5)).validate(scene_array)
