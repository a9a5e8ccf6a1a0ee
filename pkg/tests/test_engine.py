"""Session engine: uploads of each artifact family, pointer turns, chat turns,
drag application, active-mask retirement, and external tool dispatch."""

import base64
import io
import json
import zipfile

import numpy as np
import pytest
from PIL import Image

from conftest import click_samples
from pointchat.errors import (
    EmptyUtterance,
    MalformedManifest,
    TurnInFlight,
    UnknownArtifact,
    UnknownTarget,
)
from pointchat.raster import decode_image, decode_mask_png, encode_png
from stubserver import StubServer


def make_clip_zip(n_frames=50, fps=5, size=16):
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as bundle:
        names = []
        for i in range(n_frames):
            frame = np.full((size, size, 3), (i * 5) % 256, np.uint8)
            name = f"frame_{i:03d}.png"
            bundle.writestr(name, encode_png(frame))
            names.append(name)
        bundle.writestr("manifest.json", json.dumps({"fps": fps, "frames": names}))
    return buf.getvalue()


# -- uploads ------------------------------------------------------------------


def test_upload_png_stores_canonical_image(engine, scene_array):
    sid = engine.create_session()
    out = engine.upload_artifact(sid, "scene.png", encode_png(scene_array))
    assert out["kind"] == "image"
    assert out["name"] == "scene.png"
    assert out["turn_index"] == 0
    data, content_type, record = engine.artifact_payload(sid, "scene.png")
    assert content_type == "image/png"
    assert np.array_equal(decode_image(data), scene_array)
    assert record["producer"] == "upload"


def test_upload_jpeg_is_reencoded_to_png(engine, scene_array):
    sid = engine.create_session()
    buf = io.BytesIO()
    Image.fromarray(scene_array).save(buf, "JPEG", quality=95)
    out = engine.upload_artifact(sid, "photo.jpg", buf.getvalue())
    assert out["artifact_id"].endswith("_image.png")
    data, _, _ = engine.artifact_payload(sid, out["artifact_id"])
    assert decode_image(data).shape == scene_array.shape


def test_upload_text_file(engine):
    sid = engine.create_session()
    out = engine.upload_artifact(sid, "notes.txt", b"some words")
    assert out["kind"] == "text"
    assert engine.artifact_payload(sid, out["artifact_id"])[0] == b"some words"


def test_upload_rejects_unknown_suffixes(engine):
    sid = engine.create_session()
    with pytest.raises(ValueError, match="unsupported"):
        engine.upload_artifact(sid, "archive.tar", b"x")


def test_upload_ocr_sidecar_lands_next_to_the_artifact(engine, scene_array):
    sid = engine.create_session()
    sidecar = json.dumps([{"box": [100, 100, 160, 160], "text": "EXIT"}]).encode()
    out = engine.upload_artifact(sid, "scene.png", encode_png(scene_array), ocr_sidecar=sidecar)
    path = engine.store.artifact_path(sid, out["artifact_id"])
    assert path.with_name(path.name + ".ocr.json").read_bytes() == sidecar


def test_upload_rejects_non_list_sidecar(engine, scene_array):
    sid = engine.create_session()
    with pytest.raises(ValueError, match="sidecar"):
        engine.upload_artifact(sid, "scene.png", encode_png(scene_array), ocr_sidecar=b"{}")


def test_upload_zip_bundle_extracts_frames_content_addressed(engine):
    sid = engine.create_session()
    out = engine.upload_artifact(sid, "clip.zip", make_clip_zip())
    assert out["kind"] == "video"
    manifest = json.loads(engine.artifact_payload(sid, out["artifact_id"])[0])
    assert manifest["fps"] == 5
    assert len(manifest["frames"]) == 50
    assert all(f.startswith("frames/") for f in manifest["frames"])
    # frame files exist and round-trip through frame_payload
    first = engine.frame_payload(sid, manifest["frames"][0])
    assert decode_image(first).shape == (16, 16, 3)


def test_upload_zip_shares_identical_frame_files(engine):
    buf = io.BytesIO()
    frame = encode_png(np.zeros((8, 8, 3), np.uint8))
    with zipfile.ZipFile(buf, "w") as bundle:
        bundle.writestr("a.png", frame)
        bundle.writestr("b.png", frame)
        bundle.writestr("manifest.json", json.dumps({"fps": 1, "frames": ["a.png", "b.png"]}))
    sid = engine.create_session()
    out = engine.upload_artifact(sid, "clip.zip", buf.getvalue())
    manifest = json.loads(engine.artifact_payload(sid, out["artifact_id"])[0])
    assert manifest["frames"][0] == manifest["frames"][1]  # same content, same file
    frames_dir = engine.store.session_dir(sid) / "artifacts" / "frames"
    assert len(list(frames_dir.iterdir())) == 1


def test_upload_zip_requires_manifest_and_all_frames(engine):
    sid = engine.create_session()
    empty = io.BytesIO()
    with zipfile.ZipFile(empty, "w") as bundle:
        bundle.writestr("stray.png", encode_png(np.zeros((4, 4, 3), np.uint8)))
    with pytest.raises(MalformedManifest, match="manifest"):
        engine.upload_artifact(sid, "clip.zip", empty.getvalue())

    missing = io.BytesIO()
    with zipfile.ZipFile(missing, "w") as bundle:
        bundle.writestr("manifest.json", json.dumps({"fps": 1, "frames": ["gone.png"]}))
    with pytest.raises(MalformedManifest, match="missing frame"):
        engine.upload_artifact(sid, "clip.zip", missing.getvalue())

    with pytest.raises(MalformedManifest, match="zip"):
        engine.upload_artifact(sid, "clip.zip", b"definitely not a zip")


def test_upload_bare_manifest_json_is_validated(engine):
    sid = engine.create_session()
    good = json.dumps({"fps": 2, "frames": ["frames/x.png"]}).encode()
    assert engine.upload_artifact(sid, "clip.json", good)["kind"] == "video"
    with pytest.raises(MalformedManifest):
        engine.upload_artifact(sid, "bad.json", json.dumps({"fps": 0, "frames": []}).encode())


def test_artifact_payload_unknown_reference(engine):
    sid = engine.create_session()
    with pytest.raises(UnknownArtifact):
        engine.artifact_payload(sid, "ghost.png")


def test_frame_payload_refuses_path_traversal(engine):
    sid = engine.create_session()
    with pytest.raises(ValueError, match="escapes"):
        engine.frame_payload(sid, "../state.json")
    with pytest.raises(UnknownArtifact):
        engine.frame_payload(sid, "frames/nothing.png")


# -- pointer turns ------------------------------------------------------------


def test_click_turn_selects_and_reports(scene_session):
    engine, sid = scene_session["engine"], scene_session["session_id"]
    history = engine.history(sid)
    assert history["active_mask"] == scene_session["mask_id"]
    bits = decode_mask_png(engine.store.artifact_bytes(sid, scene_session["mask_id"]))
    expected = np.zeros((256, 256), bool)
    expected[100:160, 100:160] = True
    assert np.array_equal(bits, expected)
    pointer_turn = history["turns"][1]
    assert pointer_turn["status"] == "ok"
    assert pointer_turn["pointer_events"][0]["kind"] == "click"


def test_pointer_turn_rejects_unknown_targets(engine):
    sid = engine.create_session()
    with pytest.raises(UnknownTarget):
        engine.pointer_turn(sid, {"target": "ghost.png", "samples": click_samples(10, 10)})


def test_pointer_turn_requires_an_image_target(engine):
    sid = engine.create_session()
    engine.upload_artifact(sid, "notes.txt", b"words")
    with pytest.raises(ValueError, match="image"):
        engine.pointer_turn(sid, {"target": "notes.txt", "samples": click_samples(1, 1)})


def test_pointer_with_command_runs_the_tool_on_the_fresh_mask(engine, scene_array):
    sid = engine.create_session()
    engine.upload_artifact(sid, "scene.png", encode_png(scene_array))
    response = engine.pointer_turn(sid, {
        "target": "scene.png",
        "samples": click_samples(130, 130),
        "utterance": "remove the masked object",
    })
    assert response["status"] == "ok"
    kinds = [a["kind"] for a in response["new_artifacts"]]
    assert kinds.count("mask") == 1 and kinds.count("image") == 1
    edited = next(a for a in response["new_artifacts"] if a["kind"] == "image")
    out = decode_image(engine.artifact_payload(sid, edited["id"])[0])
    assert (out == (0, 0, 255)).all()  # red square healed over with background
    # the edit consumed the selection, so the mask is retired
    assert response["active_mask"] is None


def test_pointer_with_reading_command_answers_from_the_gesture(engine, scene_array):
    sid = engine.create_session()
    sidecar = json.dumps([{"box": [100, 100, 160, 160], "text": "EXIT"}]).encode()
    engine.upload_artifact(sid, "scene.png", encode_png(scene_array), ocr_sidecar=sidecar)
    response = engine.pointer_turn(sid, {
        "target": "scene.png",
        "samples": click_samples(130, 130),
        "utterance": "what does the sign say in the masked area",
    })
    assert response["status"] == "ok"
    assert response["reply_text"] == "read: EXIT"
    assert response["plan"] == []  # no tool call; perception answered directly
    assert response["perception"]["kind"] == "text"
    assert response["perception"]["text"] == "EXIT"


def test_pointer_reading_command_without_text_says_so(engine, scene_array):
    sid = engine.create_session()
    engine.upload_artifact(sid, "scene.png", encode_png(scene_array))
    response = engine.pointer_turn(sid, {
        "target": "scene.png",
        "samples": click_samples(130, 130),
        "utterance": "read the masked text",
    })
    assert response["reply_text"] == "no text found there"


def test_drag_turn_moves_the_selected_object(scene_session):
    engine, sid = scene_session["engine"], scene_session["session_id"]
    response = engine.pointer_turn(sid, {
        "target": "scene.png",
        "mode_hint": "drag",
        "samples": click_samples(130, 130) + [
            {"x": (170 + 0.5) / 256, "y": (150 + 0.5) / 256, "t_ms": 200.0}
        ],
    })
    assert response["status"] == "ok"
    assert response["perception"]["drag"]["dx"] == 40
    assert response["perception"]["drag"]["dy"] == 20
    images = [a for a in response["new_artifacts"] if a["kind"] == "image"]
    moved = decode_image(engine.artifact_payload(sid, images[0]["id"])[0])
    expected = np.zeros((256, 256, 3), np.uint8)
    expected[:] = (0, 0, 255)
    expected[120:180, 140:200] = (255, 0, 0)  # square displaced by (+40, +20)
    assert np.array_equal(moved, expected)
    # active mask re-anchored on the moved object in the new image
    state = engine.store.get(sid)
    assert state.pending_drag is None
    new_mask = decode_mask_png(engine.store.artifact_bytes(sid, state.active_mask))
    assert np.array_equal(new_mask, (expected == (255, 0, 0)).all(axis=2))
    assert state.artifacts[state.active_mask].meta["source_image"] == images[0]["id"]


# -- chat turns ---------------------------------------------------------------


def test_chat_caption(engine, scene_array):
    sid = engine.create_session()
    engine.upload_artifact(sid, "scene.png", encode_png(scene_array))
    response = engine.chat_turn(sid, "caption this photo")
    assert response["status"] == "ok"
    assert "a 256x256 image, mostly blue" in response["reply_text"]
    assert response["plan"][0]["tool"] == "caption_photo"


def test_chat_clarifies_nonsense(engine, scene_array):
    sid = engine.create_session()
    engine.upload_artifact(sid, "scene.png", encode_png(scene_array))
    response = engine.chat_turn(sid, "flibber the gromp sideways")
    assert response["status"] == "clarify"
    assert "rephrase" in response["detail"]


def test_chat_rejects_empty_utterances(engine):
    sid = engine.create_session()
    with pytest.raises(EmptyUtterance):
        engine.chat_turn(sid, "   ")


@pytest.fixture()
def small_scene(engine):
    """32x32 scene whose caption changes when the red square is removed."""
    image = np.zeros((32, 32, 3), np.uint8)
    image[:] = (0, 0, 255)
    image[4:28, 4:28] = (255, 0, 0)
    sid = engine.create_session()
    engine.upload_artifact(sid, "small.png", encode_png(image))
    engine.pointer_turn(sid, {"target": "small.png", "samples": click_samples(16, 16, size=32)})
    return sid


def test_chained_edit_then_caption_sees_the_edited_image(engine, small_scene):
    sid = small_scene
    before = engine.chat_turn(sid, "caption this photo")
    assert "mostly purple" in before["reply_text"]  # red square dominates the mean
    engine.pointer_turn(sid, {"target": "small.png", "samples": click_samples(16, 16, size=32)})
    response = engine.chat_turn(sid, "remove the masked object and then caption this photo")
    assert response["status"] == "ok"
    assert [s["tool"] for s in response["plan"]] == ["remove_masked_object", "caption_photo"]
    assert "mostly blue" in response["reply_text"]  # captioned the edited image


def test_separate_turns_retire_the_mask_and_follow_recency(engine, small_scene):
    sid = small_scene
    removed = engine.chat_turn(sid, "remove the masked object")
    assert removed["status"] == "ok"
    assert engine.store.get(sid).active_mask is None
    after = engine.chat_turn(sid, "caption this photo")
    assert "mostly blue" in after["reply_text"]  # recency found the edited image


def test_chat_highlight_defaults_to_the_midpoint(engine):
    sid = engine.create_session()
    engine.upload_artifact(sid, "clip.zip", make_clip_zip())
    source = json.loads(engine.artifact_payload(sid, "clip.zip")[0])
    response = engine.chat_turn(sid, "cut this video to a tiktok video")
    assert response["status"] == "ok"
    clip_record = next(a for a in response["new_artifacts"] if a["kind"] == "video")
    clip = json.loads(engine.artifact_payload(sid, clip_record["id"])[0])
    # 10 s at 5 fps, midpoint 5 s, +/-2 s -> frames 15..34
    assert clip["frames"] == source["frames"][15:35]


def test_chat_highlight_takes_a_spoken_timestamp(engine):
    sid = engine.create_session()
    engine.upload_artifact(sid, "clip.zip", make_clip_zip())
    source = json.loads(engine.artifact_payload(sid, "clip.zip")[0])
    response = engine.chat_turn(sid, "cut a highlight from this video at 8 seconds")
    clip_record = next(a for a in response["new_artifacts"] if a["kind"] == "video")
    clip = json.loads(engine.artifact_payload(sid, clip_record["id"])[0])
    # window [6 s, 10 s] -> frames 30..49
    assert clip["frames"] == source["frames"][30:50]


def test_turns_are_serialized_per_session(engine, scene_array):
    sid = engine.create_session()
    engine.upload_artifact(sid, "scene.png", encode_png(scene_array))
    with engine.store.turn_transaction(sid):
        with pytest.raises(TurnInFlight):
            engine.chat_turn(sid, "caption this photo")
        with pytest.raises(TurnInFlight):
            engine.pointer_turn(sid, {"target": "scene.png", "samples": click_samples(1, 1)})


def test_history_records_every_turn_in_order(engine, scene_array):
    sid = engine.create_session()
    engine.upload_artifact(sid, "scene.png", encode_png(scene_array))
    engine.pointer_turn(sid, {"target": "scene.png", "samples": click_samples(130, 130)})
    engine.chat_turn(sid, "caption this photo")
    history = engine.history(sid)
    assert [t["index"] for t in history["turns"]] == [0, 1, 2]
    assert history["turns"][2]["user_utterance"] == "caption this photo"
    assert history["turns"][2]["plan"][0]["tool"] == "caption_photo"


# -- external tools -----------------------------------------------------------


BLUR_DESCRIPTOR = {
    "name": "blur_image",
    "description": "Blur the image softly. Trigger examples: blur this image.",
    "args": [
        {"name": "image_path", "kind": "image_path", "required": True},
        {"name": "prompt", "kind": "prompt", "required": True},
    ],
    "output_kind": "image",
}


def test_external_tool_round_trip_through_chat(engine, scene_array):
    blurred = encode_png(np.full((4, 4, 3), 7, np.uint8))
    reply = {"outputs": [{"kind": "image", "b64": base64.b64encode(blurred).decode()}]}
    routes = {
        "/descriptor": (200, "application/json", BLUR_DESCRIPTOR),
        "/invoke": (200, "application/json", reply),
    }
    with StubServer(routes) as server:
        descriptor = engine.register_external_tool(server.url)
        assert descriptor.origin == "external"
        assert "blur_image" in [t["name"] for t in engine.registry_view()]

        sid = engine.create_session()
        engine.upload_artifact(sid, "scene.png", encode_png(scene_array))
        response = engine.chat_turn(sid, "blur this image")
        assert response["status"] == "ok"

        invoke = next(r for r in server.requests if r["path"] == "/invoke")
        body = json.loads(invoke["body"])
        assert body["tool"] == "blur_image"
        sent = base64.b64decode(body["args"]["image_path"]["b64"])
        assert np.array_equal(decode_image(sent), scene_array)

    stored = next(a for a in response["new_artifacts"] if a["kind"] == "image")
    assert stored["producer"] == "blur_image"
    assert engine.artifact_payload(sid, stored["id"])[0] == blurred


def test_unreachable_external_tool_fails_the_step_not_the_session(engine, scene_array):
    with StubServer({"/descriptor": (200, "application/json", BLUR_DESCRIPTOR)}) as server:
        engine.register_external_tool(server.url)
    # server is now down; invoking should produce an error turn, not an exception
    engine.config.external_timeout_s = 0.5
    sid = engine.create_session()
    engine.upload_artifact(sid, "scene.png", encode_png(scene_array))
    response = engine.chat_turn(sid, "blur this image")
    assert response["status"] == "error"
    assert "ToolUnavailable" in response["detail"]
    # the session remains usable
    assert engine.chat_turn(sid, "caption this photo")["status"] == "ok"
