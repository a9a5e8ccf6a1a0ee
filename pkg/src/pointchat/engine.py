"""Session engine: the one object that owns the store, the tool registry, the
perception unit, and the command controller, and that exposes the operations a
transport (HTTP service, replay harness, tests) builds on.

Every mutating operation is a turn: it runs under the session's turn lock,
appends exactly one turn record, and registers outputs as new artifacts.
Uploads, pointer gestures, and chat messages are all turns.
"""

from __future__ import annotations

import io
import json
import logging
import zipfile
from pathlib import Path
from typing import Optional

import numpy as np

from pointchat import kernels
from pointchat.config import EngineConfig
from pointchat.controller import Controller, PointerSnapshot, TurnOutcome
from pointchat.errors import (
    ClarifyNeeded,
    EmptyUtterance,
    MalformedManifest,
    PointChatError,
    ToolUnavailable,
    UnknownTarget,
)
from pointchat.llm import build_backend
from pointchat.perception import PerceptionUnit, StrokeDraft
from pointchat.pointing import ModeHint, PointerContext, classify_gesture, parse_samples
from pointchat.raster import decode_image, decode_mask_png, encode_mask_png, encode_png
from pointchat.session import (
    KIND_IMAGE,
    KIND_MASK,
    KIND_TEXT,
    KIND_VIDEO,
    SessionStore,
    Turn,
)
from pointchat.toolkit.builtins import (
    caption_image,
    conditional_generation,
    declares_text_from_region,
    default_registry,
    question_masked_object,
    remove_masked_object,
    validate_manifest,
    video_highlight,
)
from pointchat.toolkit.descriptors import (
    ToolDescriptor,
    ToolResult,
    decode_invocation,
    encode_invocation,
)
from pointchat.toolkit.external import fetch_descriptor, invoke_external

logger = logging.getLogger(__name__)

CONTENT_TYPES = {".png": "image/png", ".json": "application/json", ".txt": "text/plain"}

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


class Engine:
    def __init__(self, config: Optional[EngineConfig] = None):
        self.config = config or EngineConfig()
        self.store = SessionStore(self.config.artifact_root)
        self.registry = default_registry()
        self.llm = build_backend(self.config.llm_backend, self.config.llm_timeout_s)
        self.perception = PerceptionUnit(self.store, self.config)
        self.controller = Controller(
            self.registry.snapshot(),
            self.store,
            llm=self.llm,
            clarify_threshold=self.config.clarify_threshold,
        )
        for endpoint in self.config.external_tools:
            try:
                self.register_external_tool(endpoint)
            except (ToolUnavailable, PointChatError) as exc:
                logger.warning("skipping external tool at %s: %s", endpoint, exc)

    # -- registry -------------------------------------------------------------

    def register_external_tool(self, endpoint: str) -> ToolDescriptor:
        descriptor = fetch_descriptor(endpoint)
        self.registry.register(descriptor)
        self.controller.registry = tuple(self.registry.snapshot())
        return descriptor

    def registry_view(self) -> list[dict]:
        return [d.to_dict() for d in self.registry.snapshot()]

    # -- sessions and artifacts -----------------------------------------------

    def create_session(self) -> str:
        return self.store.create_session()

    def upload_artifact(
        self,
        session_id: str,
        filename: str,
        data: bytes,
        ocr_sidecar: Optional[bytes] = None,
    ) -> dict:
        """Ingest a client file as a new artifact and record an upload turn.

        Images are re-encoded to canonical PNG, zip bundles become a video
        manifest plus extracted frame files, bare .json is taken as a video
        manifest, and .txt becomes a text artifact.
        """
        with self.store.turn_transaction(session_id, blocking=False):
            suffix = Path(filename).suffix.lower()
            if suffix in IMAGE_SUFFIXES:
                image = decode_image(data)
                artifact_id = self.store.add_artifact(
                    session_id, encode_png(image), KIND_IMAGE, producer="upload", name=filename
                )
                if ocr_sidecar is not None:
                    entries = json.loads(ocr_sidecar)
                    if not isinstance(entries, list):
                        raise ValueError("ocr sidecar must be a JSON list")
                    sidecar_path = Path(str(self.store.artifact_path(session_id, artifact_id)) + ".ocr.json")
                    sidecar_path.write_bytes(ocr_sidecar)
            elif suffix == ".zip":
                artifact_id = self._ingest_video_bundle(session_id, filename, data)
            elif suffix == ".json":
                manifest = json.loads(data)
                validate_manifest(manifest)
                artifact_id = self.store.add_artifact(
                    session_id, json.dumps(manifest, sort_keys=True).encode(), KIND_VIDEO,
                    producer="upload", name=filename,
                )
            elif suffix == ".txt":
                artifact_id = self.store.add_artifact(
                    session_id, data, KIND_TEXT, producer="upload", name=filename
                )
            else:
                raise ValueError(f"unsupported upload type '{suffix}'")
            state = self.store.get(session_id)
            turn = Turn(
                index=state.next_turn_index,
                output_artifacts=[artifact_id],
                reply_text=f"stored {filename} as {artifact_id}",
            )
            self.store.record_turn(session_id, turn)
            artifact = state.artifacts[artifact_id]
            return {"artifact_id": artifact_id, "kind": artifact.kind, "name": artifact.name,
                    "turn_index": turn.index}

    def _ingest_video_bundle(self, session_id: str, filename: str, data: bytes) -> str:
        """A video arrives as a zip of manifest.json plus frame images. Frames
        are stored content-addressed under artifacts/frames/ and the manifest
        is rewritten to reference them, so later clips can share frame files."""
        try:
            bundle = zipfile.ZipFile(io.BytesIO(data))
        except zipfile.BadZipFile as exc:
            raise MalformedManifest(f"not a zip archive: {exc}") from exc
        names = {Path(n).name: n for n in bundle.namelist() if not n.endswith("/")}
        if "manifest.json" not in names:
            raise MalformedManifest("bundle has no manifest.json")
        manifest = json.loads(bundle.read(names["manifest.json"]))
        fps, frames = validate_manifest(manifest)
        frames_dir = self.store.session_dir(session_id) / "artifacts" / "frames"
        frames_dir.mkdir(exist_ok=True)
        rewritten = []
        for frame in frames:
            frame_name = Path(frame).name
            if frame_name not in names:
                raise MalformedManifest(f"manifest references missing frame '{frame}'")
            frame_bytes = bundle.read(names[frame_name])
            image = decode_image(frame_bytes)  # raises on a non-image payload
            stored = f"frames/{_short_hash(frame_bytes)}.png"
            target = self.store.session_dir(session_id) / "artifacts" / stored
            if not target.exists():
                target.write_bytes(encode_png(image))
            rewritten.append(stored)
        canonical = json.dumps({"fps": fps, "frames": rewritten}, sort_keys=True).encode()
        return self.store.add_artifact(session_id, canonical, KIND_VIDEO, producer="upload", name=filename)

    def artifact_payload(self, session_id: str, ref: str) -> tuple[bytes, str, dict]:
        """(bytes, content type, artifact record) for a stored id or name."""
        resolved = self.store.resolve_artifact(session_id, ref)
        if resolved is None:
            from pointchat.errors import UnknownArtifact

            raise UnknownArtifact(f"unknown artifact '{ref}'")
        artifact = self.store.get(session_id).artifacts[resolved]
        data = self.store.artifact_bytes(session_id, resolved)
        content_type = CONTENT_TYPES.get(Path(artifact.path).suffix, "application/octet-stream")
        return data, content_type, artifact.to_dict()

    def frame_payload(self, session_id: str, rel_path: str) -> bytes:
        """Bytes of a video frame file referenced by a manifest."""
        base = (self.store.session_dir(session_id) / "artifacts").resolve()
        target = (base / rel_path).resolve()
        if base not in target.parents:
            raise ValueError("frame path escapes the artifact directory")
        if not target.is_file():
            from pointchat.errors import UnknownArtifact

            raise UnknownArtifact(f"no frame file '{rel_path}'")
        return target.read_bytes()

    def history(self, session_id: str) -> dict:
        state = self.store.get(session_id)
        return {
            "session_id": session_id,
            "turns": [t.to_dict() for t in state.turns],
            "artifacts": {k: a.to_dict() for k, a in state.artifacts.items()},
            "active_mask": state.active_mask,
            "open_draft": state.open_draft,
            "pending_drag": state.pending_drag,
        }

    # -- pointer turns --------------------------------------------------------

    def pointer_turn(self, session_id: str, payload: dict) -> dict:
        """Handle one finished gesture, optionally with an utterance riding on
        the same turn. The gesture updates pointer state first, so the command
        sees the mask/draft it just produced."""
        with self.store.turn_transaction(session_id, blocking=False):
            state = self.store.get(session_id)
            target = self.store.resolve_artifact(session_id, str(payload.get("target", "")))
            if target is None:
                raise UnknownTarget(f"unknown pointer target '{payload.get('target')}'")
            if state.artifacts[target].kind != KIND_IMAGE:
                raise ValueError("pointer target must be an image artifact")
            samples = parse_samples(payload.get("samples", []))
            mode_hint = ModeHint(str(payload.get("mode_hint", "auto")))
            utterance = str(payload.get("utterance", "") or "").strip()

            image = decode_image(self.store.artifact_bytes(session_id, target))
            height, width = image.shape[:2]
            active_bits = None
            if state.active_mask is not None:
                mask_meta = state.artifacts[state.active_mask].meta
                # only consult for drag inference when the mask belongs to this image
                if mask_meta.get("source_image") == target:
                    active_bits = decode_mask_png(self.store.artifact_bytes(session_id, state.active_mask))
            context = PointerContext(
                target_artifact=target,
                image_size=(width, height),
                active_mask=active_bits,
                known_artifacts=frozenset(state.artifacts),
            )
            event = classify_gesture(
                samples,
                mode_hint,
                context,
                click_extent=self.config.click_extent,
                click_max_ms=self.config.click_max_ms,
                auto_drag=self.config.auto_drag,
            )
            want_text = bool(utterance) and self._routes_to_text_from_region(utterance)
            perception = self.perception.handle_gesture(session_id, event, want_text=want_text)
            new_artifacts = list(perception.new_artifacts)
            reply_parts = [self._describe_perception(perception)]

            if perception.kind == "drag":
                moved_image, moved_mask = self._apply_drag(session_id, perception.drag)
                new_artifacts += [moved_image, moved_mask]
                reply_parts.append(f"moved the selection to produce {moved_image}")

            outcome: Optional[TurnOutcome] = None
            if utterance and perception.kind == "text":
                # the gesture already answered the text request; no tool call needed
                reply_parts = [f"read: {perception.text}" if perception.text else "no text found there"]
            elif utterance:
                outcome = self._run_command(session_id, utterance)
                new_artifacts += outcome.new_artifacts
                reply_parts.append(outcome.reply_text)

            status = outcome.status if outcome else "ok"
            detail = outcome.clarify_question or outcome.error if outcome else ""
            turn = Turn(
                index=self.store.get(session_id).next_turn_index,
                user_utterance=utterance or None,
                pointer_events=[_event_wire(payload, event.kind.value)],
                plan=outcome.plan.to_dict()["steps"] if outcome and outcome.plan else [],
                output_artifacts=new_artifacts,
                reply_text=" ".join(p for p in reply_parts if p),
                status=status,
                detail=detail,
            )
            self.store.record_turn(session_id, turn)
            return self._turn_response(session_id, turn, perception=perception.to_dict())

    def _routes_to_text_from_region(self, utterance: str) -> bool:
        from pointchat.controller import Clarify, parse_instruction, select_tool

        try:
            clause = self.controller.split_clauses(utterance)[0]
            selected = select_tool(
                parse_instruction(clause, self.controller.lexicon),
                self.controller.registry,
                self.controller.clarify_threshold,
            )
        except (EmptyUtterance, IndexError):
            return False
        return not isinstance(selected, Clarify) and declares_text_from_region(selected.descriptor)

    @staticmethod
    def _describe_perception(perception) -> str:
        if perception.kind == "mask":
            return f"selected a region ({perception.mask_id})"
        if perception.kind == "text":
            return ""
        if perception.kind == "draft":
            return f"added strokes to the draft ({perception.draft_id})"
        drag = perception.drag or {}
        return f"drag of ({drag.get('dx')}, {drag.get('dy')}) px recorded"

    def _apply_drag(self, session_id: str, drag: dict) -> tuple[str, str]:
        """Move the selected object: inpaint it out of its spot, paste its
        pixels at the displaced location, and re-anchor the active mask there."""
        mask_id = drag["mask_id"]
        dx, dy = int(drag["dx"]), int(drag["dy"])
        state = self.store.get(session_id)
        source_image = state.artifacts[mask_id].meta.get("source_image")
        image = decode_image(self.store.artifact_bytes(session_id, source_image))
        bits = decode_mask_png(self.store.artifact_bytes(session_id, mask_id))
        moved = kernels.inpaint(image, bits)
        height, width = bits.shape
        ys, xs = np.nonzero(bits)
        ty, tx = ys + dy, xs + dx
        keep = (ty >= 0) & (ty < height) & (tx >= 0) & (tx < width)
        moved[ty[keep], tx[keep]] = image[ys[keep], xs[keep]]
        new_bits = np.zeros_like(bits)
        new_bits[ty[keep], tx[keep]] = True
        image_id = self.store.add_artifact(session_id, encode_png(moved), KIND_IMAGE, producer="drag")
        new_mask_id = self.store.add_artifact(
            session_id,
            encode_mask_png(new_bits),
            KIND_MASK,
            producer="drag",
            meta={"source_image": image_id},
        )
        state.active_mask = new_mask_id
        state.pending_drag = None
        self.store.save(session_id)
        return image_id, new_mask_id

    # -- chat turns -----------------------------------------------------------

    def chat_turn(self, session_id: str, utterance: str) -> dict:
        with self.store.turn_transaction(session_id, blocking=False):
            outcome = self._run_command(session_id, utterance)
            turn = Turn(
                index=self.store.get(session_id).next_turn_index,
                user_utterance=utterance,
                plan=outcome.plan.to_dict()["steps"] if outcome.plan else [],
                output_artifacts=outcome.new_artifacts,
                reply_text=outcome.reply_text,
                status=outcome.status,
                detail=outcome.clarify_question or outcome.error,
            )
            self.store.record_turn(session_id, turn)
            return self._turn_response(session_id, turn)

    def _run_command(self, session_id: str, utterance: str) -> TurnOutcome:
        try:
            plan = self.controller.plan(utterance, session_id)
        except ClarifyNeeded as exc:
            return TurnOutcome(status="clarify", reply_text=exc.question, clarify_question=exc.question)
        snapshot = self._pointer_snapshot(session_id)
        return self.controller.execute(
            plan,
            session_id,
            snapshot,
            register_outputs=lambda descriptor, result: self._register_outputs(session_id, descriptor, result),
            dispatcher=lambda descriptor, args: self._dispatch(session_id, descriptor, args),
        )

    def _pointer_snapshot(self, session_id: str) -> PointerSnapshot:
        state = self.store.get(session_id)
        target_image = None
        if state.active_mask is not None and state.active_mask in state.artifacts:
            target_image = state.artifacts[state.active_mask].meta.get("source_image")
        return PointerSnapshot(
            active_mask=state.active_mask,
            open_draft=state.open_draft,
            pending_drag=state.pending_drag,
            target_image=target_image,
        )

    def _register_outputs(self, session_id: str, descriptor: ToolDescriptor, result: ToolResult) -> list:
        """Store data-bearing outputs as artifacts; outputs an external tool
        already stored keep their ids. An edit that consumed the active mask
        also retires it, so recency resolution moves to the edited image."""
        state = self.store.get(session_id)
        consumed_active = False
        ids = []
        for output in result.outputs:
            if "data" in output:
                data = output.pop("data")
                output["artifact_id"] = self.store.add_artifact(
                    session_id, data, output["kind"], producer=descriptor.name
                )
            if "artifact_id" in output:
                ids.append(output["artifact_id"])
            if output.get("kind") == KIND_IMAGE:
                consumed_active = True
        if consumed_active and state.active_mask is not None:
            arg_values = set(result.args_used.values()) if result.args_used else set()
            if state.active_mask in arg_values:
                state.active_mask = None
        self.store.save(session_id)
        return ids

    # -- dispatch -------------------------------------------------------------

    def _dispatch(self, session_id: str, descriptor: ToolDescriptor, args: dict) -> ToolResult:
        """Invoke one tool. The invocation crosses a comma-separated textual
        surface both ways, so only what survives that encoding reaches a tool."""
        present = [a.name for a in descriptor.args if a.name in args]
        line = encode_invocation(descriptor, args)
        decoded = decode_invocation(descriptor, line, present)
        if descriptor.origin == "external":
            result = invoke_external(
                descriptor,
                decoded,
                timeout=self.config.external_timeout_s,
                payload_mode=self.config.external_payload,
                artifact_bytes=lambda aid: self.store.artifact_bytes(session_id, aid),
                artifact_url=self._artifact_url_builder(session_id),
                store_output=lambda kind, data: self.store.add_artifact(
                    session_id, data, kind, producer=descriptor.name
                ),
            )
        else:
            handler = getattr(self, f"_tool_{descriptor.name}", None)
            if handler is None:
                raise ToolUnavailable(f"no built-in implementation for '{descriptor.name}'")
            result = handler(session_id, decoded)
        result.args_used = dict(decoded)
        return result

    def _artifact_url_builder(self, session_id: str):
        base = self.config.public_base_url
        if not base:
            return None
        return lambda aid: f"{base.rstrip('/')}/sessions/{session_id}/artifacts/{aid}"

    # -- built-in tool adapters ----------------------------------------------

    def _load_image(self, session_id: str, artifact_id: str) -> np.ndarray:
        return decode_image(self.store.artifact_bytes(session_id, artifact_id))

    def _load_mask(self, session_id: str, artifact_id: str) -> np.ndarray:
        return decode_mask_png(self.store.artifact_bytes(session_id, artifact_id))

    def _tool_remove_masked_object(self, session_id: str, args: dict) -> ToolResult:
        out = remove_masked_object(
            self._load_image(session_id, args["image_path"]),
            self._load_mask(session_id, args["mask_path"]),
        )
        return ToolResult(outputs=[{"kind": KIND_IMAGE, "data": encode_png(out)}])

    def _tool_question_masked_object(self, session_id: str, args: dict) -> ToolResult:
        answer = question_masked_object(
            self._load_image(session_id, args["image_path"]),
            self._load_mask(session_id, args["mask_path"]),
            args["question"],
        )
        return ToolResult(outputs=[{"kind": KIND_TEXT, "text": answer}])

    def _tool_replace_masked_object(self, session_id: str, args: dict) -> ToolResult:
        draft = None
        draft_base = None
        if "draft_path" in args:
            draft = StrokeDraft.from_json(self.store.artifact_bytes(session_id, args["draft_path"]))
            if draft.base_image:
                draft_base = self._load_image(session_id, draft.base_image)
        image = self._load_image(session_id, args["image_path"]) if "image_path" in args else None
        mask = self._load_mask(session_id, args["mask_path"]) if "mask_path" in args else None
        out, title = conditional_generation(args["prompt"], image=image, mask=mask,
                                            draft=draft, draft_base=draft_base)
        return ToolResult(outputs=[
            {"kind": KIND_IMAGE, "data": encode_png(out)},
            {"kind": KIND_TEXT, "text": title},
        ])

    def _tool_video_highlight(self, session_id: str, args: dict) -> ToolResult:
        manifest = json.loads(self.store.artifact_bytes(session_id, args["video_path"]))
        fps, frames = validate_manifest(manifest)
        if "timestamp" in args:
            timestamp = float(args["timestamp"])
        else:
            timestamp = len(frames) / fps / 2.0  # default: the midpoint
        artifacts_dir = self.store.session_dir(session_id) / "artifacts"
        clip, interpretation = video_highlight(
            manifest,
            timestamp,
            args["prompt"],
            half_window=self.config.highlight_half_window_s,
            frame_loader=lambda rel: decode_image((artifacts_dir / rel).read_bytes()),
        )
        clip_bytes = json.dumps(clip, sort_keys=True).encode()
        return ToolResult(outputs=[
            {"kind": KIND_VIDEO, "data": clip_bytes},
            {"kind": KIND_TEXT, "text": interpretation},
        ])

    def _tool_caption_photo(self, session_id: str, args: dict) -> ToolResult:
        caption = caption_image(self._load_image(session_id, args["image_path"]))
        return ToolResult(outputs=[{"kind": KIND_TEXT, "text": caption}])

    def _tool_read_masked_text(self, session_id: str, args: dict) -> ToolResult:
        image_path = self.store.artifact_path(session_id, args["image_path"])
        text = self.perception.extract_text(
            self._load_image(session_id, args["image_path"]),
            self._load_mask(session_id, args["mask_path"]),
            image_ref=image_path,
        )
        return ToolResult(outputs=[{"kind": KIND_TEXT, "text": text}])

    # -- responses ------------------------------------------------------------

    def _turn_response(self, session_id: str, turn: Turn, perception: Optional[dict] = None) -> dict:
        state = self.store.get(session_id)
        response = {
            "session_id": session_id,
            "turn_index": turn.index,
            "status": turn.status,
            "reply_text": turn.reply_text,
            "detail": turn.detail,
            "plan": list(turn.plan),
            "new_artifacts": [state.artifacts[a].to_dict() for a in turn.output_artifacts],
            "active_mask": state.active_mask,
            "open_draft": state.open_draft,
        }
        if perception is not None:
            response["perception"] = perception
        return response


def _event_wire(payload: dict, resolved_kind: str) -> dict:
    return {
        "target": payload.get("target"),
        "mode_hint": payload.get("mode_hint", "auto"),
        "kind": resolved_kind,
        "n_samples": len(payload.get("samples", [])),
    }


def _short_hash(data: bytes) -> str:
    from hashlib import sha256

    return sha256(data).hexdigest()[:12]
