"""Open-world tool registry: descriptor schema, deterministic built-in tools,
and the HTTP protocol for attaching external model-backed tools.
"""

from pointchat.toolkit.descriptors import (
    ArgKind,
    OutputKind,
    ToolArg,
    ToolDescriptor,
    ToolRegistry,
    ToolResult,
    decode_invocation,
    encode_invocation,
)
from pointchat.toolkit.builtins import default_registry

__all__ = [
    "ArgKind",
    "OutputKind",
    "ToolArg",
    "ToolDescriptor",
    "ToolRegistry",
    "ToolResult",
    "decode_invocation",
    "encode_invocation",
    "default_registry",
]
