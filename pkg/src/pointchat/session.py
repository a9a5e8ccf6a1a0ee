"""Conversation history and the artifact store.

A session is a directory: a state document plus content-addressed artifact
files. Artifact ids are the first 12 hex chars of the sha256 of the stored
bytes, a kind suffix, and an extension, so identical content always gets the
same id and replays are hash-stable. An in-memory cache fronts the directory;
state survives process restarts.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import asdict, dataclass, field
from hashlib import sha256
from pathlib import Path
from typing import Iterator, Optional

from pointchat.errors import HashCollision, TurnInFlight, UnknownArtifact, UnknownSession

KIND_IMAGE = "image"
KIND_MASK = "mask"
KIND_DRAFT = "draft"
KIND_VIDEO = "video"
KIND_TEXT = "text"

_EXTENSIONS = {
    KIND_IMAGE: ".png",
    KIND_MASK: ".png",
    KIND_DRAFT: ".json",
    KIND_VIDEO: ".json",  # manifest file; frames referenced by relative path
    KIND_TEXT: ".txt",
}

STATE_FILE = "state.json"


@dataclass
class Artifact:
    id: str
    kind: str
    path: str                      # relative to the session directory
    producer: str                  # tool name, "upload", or "gesture"
    turn_index: int
    seq: int                       # registration order within the session
    name: str = ""                 # optional human name (upload filename)
    created_at: float = 0.0
    meta: dict = field(default_factory=dict)   # e.g. a mask's source image and seed

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "Artifact":
        return Artifact(**d)


@dataclass
class Turn:
    index: int
    user_utterance: Optional[str] = None
    pointer_events: list = field(default_factory=list)     # wire-form dicts
    plan: list = field(default_factory=list)               # serialized step list
    output_artifacts: list = field(default_factory=list)   # artifact ids
    reply_text: str = ""
    status: str = "ok"                                     # ok | clarify | error
    detail: str = ""                                       # clarify question or error text

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "Turn":
        return Turn(**d)


@dataclass
class SessionState:
    id: str
    turns: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)          # id -> Artifact
    active_mask: Optional[str] = None
    open_draft: Optional[str] = None
    pending_drag: Optional[dict] = None                    # {mask_id, dx, dy}

    @property
    def next_turn_index(self) -> int:
        return len(self.turns)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "turns": [t.to_dict() for t in self.turns],
            "artifacts": {k: a.to_dict() for k, a in self.artifacts.items()},
            "active_mask": self.active_mask,
            "open_draft": self.open_draft,
            "pending_drag": self.pending_drag,
        }

    @staticmethod
    def from_dict(d: dict) -> "SessionState":
        return SessionState(
            id=d["id"],
            turns=[Turn.from_dict(t) for t in d["turns"]],
            artifacts={k: Artifact.from_dict(a) for k, a in d["artifacts"].items()},
            active_mask=d.get("active_mask"),
            open_draft=d.get("open_draft"),
            pending_drag=d.get("pending_drag"),
        )


class SessionStore:
    """Directory-backed session registry with per-session turn serialization."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- session lifecycle ----------------------------------------------------

    def create_session(self) -> str:
        session_id = uuid.uuid4().hex[:12]
        state = SessionState(id=session_id)
        (self.root / session_id / "artifacts").mkdir(parents=True)
        self._cache[session_id] = state
        self._save(state)
        return session_id

    def get(self, session_id: str) -> SessionState:
        if session_id in self._cache:
            return self._cache[session_id]
        state_path = self.root / session_id / STATE_FILE
        if not state_path.exists():
            raise UnknownSession(f"unknown session '{session_id}'")
        state = SessionState.from_dict(json.loads(state_path.read_text()))
        self._cache[session_id] = state
        return state

    def list_sessions(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / STATE_FILE).exists())

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self._locks:
                self._locks[session_id] = threading.Lock()
            return self._locks[session_id]

    def turn_transaction(self, session_id: str, blocking: bool = True) -> "_TurnTransaction":
        """One turn in flight per session; non-blocking acquisition raises TurnInFlight."""
        return _TurnTransaction(self, session_id, blocking)

    # -- artifacts ------------------------------------------------------------

    def session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def artifact_path(self, session_id: str, artifact_id: str) -> Path:
        state = self.get(session_id)
        if artifact_id not in state.artifacts:
            raise UnknownArtifact(f"unknown artifact '{artifact_id}'")
        return self.session_dir(session_id) / state.artifacts[artifact_id].path

    def artifact_bytes(self, session_id: str, artifact_id: str) -> bytes:
        return self.artifact_path(session_id, artifact_id).read_bytes()

    def add_artifact(
        self,
        session_id: str,
        data: bytes,
        kind: str,
        producer: str,
        name: str = "",
        meta: Optional[dict] = None,
    ) -> str:
        """Store bytes content-addressed and register the artifact.

        Identical bytes of the same kind reuse the existing id; a prefix match
        with different bytes is treated as a fatal hash collision.
        """
        state = self.get(session_id)
        digest = sha256(data).hexdigest()[:12]
        artifact_id = f"{digest}_{kind}{_EXTENSIONS[kind]}"
        rel_path = Path("artifacts") / artifact_id
        abs_path = self.session_dir(session_id) / rel_path
        if abs_path.exists():
            if abs_path.read_bytes() != data:
                raise HashCollision(f"hash prefix clash on {artifact_id}")
        else:
            abs_path.write_bytes(data)
        if artifact_id not in state.artifacts:
            state.artifacts[artifact_id] = Artifact(
                id=artifact_id,
                kind=kind,
                path=str(rel_path),
                producer=producer,
                turn_index=state.next_turn_index,
                seq=len(state.artifacts),
                name=name,
                created_at=time.time(),
                meta=dict(meta or {}),
            )
        else:
            if name:
                state.artifacts[artifact_id].name = name
            if meta and not state.artifacts[artifact_id].meta:
                state.artifacts[artifact_id].meta = dict(meta)
        return artifact_id

    def resolve_artifact(self, session_id: str, ref: str) -> Optional[str]:
        """Resolve an id or human name to an artifact id, else None."""
        state = self.get(session_id)
        if ref in state.artifacts:
            return ref
        matches = [a for a in self._ordered(state) if a.name == ref]
        return matches[-1].id if matches else None

    def latest_artifact(self, session_id: str, kind: str) -> Optional[str]:
        """Most recent artifact of a kind by (turn, within-turn registration) order."""
        state = self.get(session_id)
        candidates = [a for a in self._ordered(state) if a.kind == kind]
        return candidates[-1].id if candidates else None

    def artifacts_of_kind(self, session_id: str, kind: str) -> list[Artifact]:
        return [a for a in self._ordered(self.get(session_id)) if a.kind == kind]

    @staticmethod
    def _ordered(state: SessionState) -> list[Artifact]:
        return sorted(state.artifacts.values(), key=lambda a: a.seq)

    # -- turns ----------------------------------------------------------------

    def record_turn(self, session_id: str, turn: Turn) -> Turn:
        """Append a turn and persist atomically; failed turns are recorded too."""
        state = self.get(session_id)
        if turn.index != state.next_turn_index:
            raise ValueError(f"turn index {turn.index} out of order, expected {state.next_turn_index}")
        state.turns.append(turn)
        self._save(state)
        return turn

    def save(self, session_id: str) -> None:
        self._save(self.get(session_id))

    def history_as_dialogue(self, session_id: str) -> list[dict]:
        """Turns as alternating user/assistant messages; artifact ids are quoted
        inline so a language-model backend can recover them from history."""
        state = self.get(session_id)
        messages = []
        for turn in state.turns:
            if turn.user_utterance:
                user = turn.user_utterance
            elif turn.pointer_events:
                kinds = ", ".join(e.get("kind", e.get("kind_hint", "gesture")) for e in turn.pointer_events)
                user = f"[pointer: {kinds}]"
            else:
                user = "[upload]"
            messages.append({"role": "user", "content": user})
            reply = turn.reply_text or turn.detail or ""
            messages.append({"role": "assistant", "content": reply})
        return messages

    # -- persistence ----------------------------------------------------------

    def _save(self, state: SessionState) -> None:
        state_path = self.session_dir(state.id) / STATE_FILE
        tmp = state_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(state.to_dict(), indent=1, sort_keys=True))
        tmp.replace(state_path)


class _TurnTransaction:
    def __init__(self, store: SessionStore, session_id: str, blocking: bool):
        self._lock = store.lock(session_id)
        self._blocking = blocking
        self._session_id = session_id

    def __enter__(self):
        if not self._lock.acquire(blocking=self._blocking):
            raise TurnInFlight(f"a turn is already in flight for session '{self._session_id}'")
        return self

    def __exit__(self, *exc):
        self._lock.release()
        return False


def iter_turns(state: SessionState) -> Iterator[Turn]:
    yield from state.turns
