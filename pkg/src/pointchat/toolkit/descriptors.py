"""Tool descriptor schema and the registry.

Descriptors declare a name, trigger prose, ordered typed argument slots, an
output kind, and an origin (built-in or external endpoint). The controller
talks to tools through a comma-separated invocation string (values quoted
CSV-style when they contain commas), parsed back into the typed map at the
dispatch boundary.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Optional

from pointchat.errors import DuplicateName


class ArgKind(str, enum.Enum):
    IMAGE = "image_path"
    MASK = "mask_path"
    VIDEO = "video_path"
    DRAFT = "draft_path"
    PROMPT = "prompt"
    QUESTION = "question"
    TIMESTAMP = "timestamp"


# kinds whose values are artifact references (vs. inline literals)
ARTIFACT_KINDS = {ArgKind.IMAGE, ArgKind.MASK, ArgKind.VIDEO, ArgKind.DRAFT}

# ArgKind -> session artifact kind
ARG_TO_ARTIFACT_KIND = {
    ArgKind.IMAGE: "image",
    ArgKind.MASK: "mask",
    ArgKind.VIDEO: "video",
    ArgKind.DRAFT: "draft",
}


class OutputKind(str, enum.Enum):
    IMAGE = "image"
    VIDEO = "video"
    TEXT = "text"
    DRAFT = "draft"


@dataclass(frozen=True)
class ToolArg:
    name: str
    kind: ArgKind
    required: bool = True

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind.value, "required": self.required}

    @staticmethod
    def from_dict(d: dict) -> "ToolArg":
        return ToolArg(name=d["name"], kind=ArgKind(d["kind"]), required=bool(d.get("required", True)))


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    args: tuple[ToolArg, ...]
    output_kind: OutputKind
    origin: str = "builtin"          # "builtin" or "external"
    endpoint: str = ""               # set when origin == "external"

    def __post_init__(self):
        names = [a.name for a in self.args]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate arg names in tool '{self.name}'")

    def arg(self, name: str) -> Optional[ToolArg]:
        for a in self.args:
            if a.name == name:
                return a
        return None

    def required_args(self) -> list[ToolArg]:
        return [a for a in self.args if a.required]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "args": [a.to_dict() for a in self.args],
            "output_kind": self.output_kind.value,
            "origin": self.origin,
            "endpoint": self.endpoint,
        }

    @staticmethod
    def from_dict(d: dict) -> "ToolDescriptor":
        return ToolDescriptor(
            name=d["name"],
            description=d["description"],
            args=tuple(ToolArg.from_dict(a) for a in d["args"]),
            output_kind=OutputKind(d["output_kind"]),
            origin=d.get("origin", "builtin"),
            endpoint=d.get("endpoint", ""),
        )


@dataclass
class ToolResult:
    """Ordered tool outputs. The first output carries the descriptor's declared
    output kind; extra outputs (e.g. a generated title) may follow it."""

    outputs: list = field(default_factory=list)   # {kind, artifact_id} | {kind, text}
    diagnostics: str = ""
    args_used: dict = field(default_factory=dict)  # the validated args the call saw

    def primary(self) -> dict:
        return self.outputs[0]

    def to_dict(self) -> dict:
        return {"outputs": list(self.outputs), "diagnostics": self.diagnostics,
                "args_used": dict(self.args_used)}


class ToolRegistry:
    """Ordered name-unique registry; registration order is the tie-break order
    for tool selection. Per-turn consumers take an immutable snapshot."""

    def __init__(self):
        self._tools: dict[str, ToolDescriptor] = {}

    def register(self, descriptor: ToolDescriptor) -> None:
        if descriptor.name in self._tools:
            raise DuplicateName(f"tool '{descriptor.name}' already registered")
        self._tools[descriptor.name] = descriptor

    def lookup(self, name: str) -> Optional[ToolDescriptor]:
        return self._tools.get(name)

    def list_tools(self) -> list[ToolDescriptor]:
        return list(self._tools.values())

    def snapshot(self) -> tuple[ToolDescriptor, ...]:
        return tuple(self._tools.values())

    def __len__(self) -> int:
        return len(self._tools)

    def to_dict(self) -> dict:
        return {"tools": [t.to_dict() for t in self.list_tools()]}

    @staticmethod
    def from_dict(d: dict) -> "ToolRegistry":
        registry = ToolRegistry()
        for item in d["tools"]:
            registry.register(ToolDescriptor.from_dict(item))
        return registry


def encode_invocation(descriptor: ToolDescriptor, args: dict[str, str]) -> str:
    """Flatten a typed arg map to the comma-separated wire string, in declared
    arg order; absent optional args are skipped. Values containing commas or
    quotes are CSV-quoted so prompts survive the round trip."""
    values = [str(args[a.name]) for a in descriptor.args if a.name in args]
    buf = io.StringIO()
    csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="").writerow(values)
    return buf.getvalue()


def decode_invocation(descriptor: ToolDescriptor, wire: str, present: Optional[list[str]] = None) -> dict[str, str]:
    """Parse the comma-separated invocation string back into the typed map.

    `present` lists the arg names that were encoded (declared order assumed);
    by default all declared args are expected.
    """
    names = present if present is not None else [a.name for a in descriptor.args]
    rows = list(csv.reader([wire]))
    values = rows[0] if rows else []
    if len(values) != len(names):
        raise ValueError(f"expected {len(names)} comma-separated values, got {len(values)}")
    return dict(zip(names, values))
