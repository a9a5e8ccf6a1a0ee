"""Client side of the external tool protocol.

Contract (also documented in the README):
  GET  {endpoint}/descriptor -> tool descriptor object
  POST {endpoint}/invoke     -> {"outputs": [...], "diagnostics": ""}

Invoke request body: {"tool": name, "args": {arg_name: value-object}} where a
value object is {"kind": ..., "text": ...} for literal kinds and either
{"kind": ..., "b64": ...} or {"kind": ..., "url": ...} for artifact payloads,
per the configured payload mode. Outputs mirror the same encoding. Timeouts
and non-2xx answers raise ToolUnavailable; 2xx bodies that do not follow the
schema raise MalformedResponse.
"""

from __future__ import annotations

import base64
from typing import Callable, Optional

import requests

from pointchat.errors import MalformedResponse, ToolUnavailable
from pointchat.toolkit.descriptors import ARTIFACT_KINDS, ArgKind, ToolDescriptor, ToolResult


def fetch_descriptor(endpoint: str, timeout: float = 10.0) -> ToolDescriptor:
    try:
        resp = requests.get(f"{endpoint.rstrip('/')}/descriptor", timeout=timeout)
    except requests.RequestException as exc:
        raise ToolUnavailable(f"descriptor fetch failed: {exc}") from exc
    if resp.status_code // 100 != 2:
        raise ToolUnavailable(f"descriptor fetch returned {resp.status_code}")
    try:
        data = resp.json()
        descriptor = ToolDescriptor.from_dict(data)
    except (ValueError, KeyError) as exc:
        raise MalformedResponse(f"bad descriptor payload: {exc}") from exc
    return ToolDescriptor(
        name=descriptor.name,
        description=descriptor.description,
        args=descriptor.args,
        output_kind=descriptor.output_kind,
        origin="external",
        endpoint=endpoint.rstrip("/"),
    )


def encode_args(
    descriptor: ToolDescriptor,
    args: dict[str, str],
    payload_mode: str,
    artifact_bytes: Callable[[str], bytes],
    artifact_url: Optional[Callable[[str], str]] = None,
) -> dict:
    encoded = {}
    for arg in descriptor.args:
        if arg.name not in args:
            continue
        value = args[arg.name]
        if arg.kind in ARTIFACT_KINDS:
            if payload_mode == "url":
                if artifact_url is None:
                    raise ValueError("url payload mode needs an artifact_url resolver")
                encoded[arg.name] = {"kind": arg.kind.value, "url": artifact_url(value)}
            else:
                payload = base64.b64encode(artifact_bytes(value)).decode("ascii")
                encoded[arg.name] = {"kind": arg.kind.value, "b64": payload}
        else:
            encoded[arg.name] = {"kind": arg.kind.value, "text": value}
    return encoded


def decode_output(item: dict, timeout: float) -> tuple[str, Optional[bytes], Optional[str]]:
    """Returns (kind, payload bytes or None, inline text or None)."""
    if not isinstance(item, dict) or "kind" not in item:
        raise MalformedResponse("output item missing 'kind'")
    kind = item["kind"]
    if "text" in item:
        return kind, None, str(item["text"])
    if "b64" in item:
        try:
            return kind, base64.b64decode(item["b64"]), None
        except (ValueError, TypeError) as exc:
            raise MalformedResponse(f"undecodable b64 output: {exc}") from exc
    if "url" in item:
        try:
            resp = requests.get(item["url"], timeout=timeout)
        except requests.RequestException as exc:
            raise ToolUnavailable(f"output fetch failed: {exc}") from exc
        if resp.status_code // 100 != 2:
            raise ToolUnavailable(f"output fetch returned {resp.status_code}")
        return kind, resp.content, None
    raise MalformedResponse("output item has none of text/b64/url")


def invoke_external(
    descriptor: ToolDescriptor,
    args: dict[str, str],
    *,
    timeout: float = 60.0,
    payload_mode: str = "base64",
    artifact_bytes: Callable[[str], bytes],
    artifact_url: Optional[Callable[[str], str]] = None,
    store_output: Callable[[str, bytes], str],
) -> ToolResult:
    """POST the invocation and turn the reply into a ToolResult.

    `store_output(kind, payload)` registers returned binary payloads as
    session artifacts and returns the new artifact id.
    """
    if descriptor.origin != "external":
        raise ValueError(f"tool '{descriptor.name}' is not external")
    body = {
        "tool": descriptor.name,
        "args": encode_args(descriptor, args, payload_mode, artifact_bytes, artifact_url),
    }
    try:
        resp = requests.post(f"{descriptor.endpoint}/invoke", json=body, timeout=timeout)
    except requests.RequestException as exc:
        raise ToolUnavailable(f"invoke failed: {exc}") from exc
    if resp.status_code // 100 != 2:
        raise ToolUnavailable(f"invoke returned {resp.status_code}")
    try:
        data = resp.json()
    except ValueError as exc:
        raise MalformedResponse(f"invoke reply is not JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("outputs"), list) or not data["outputs"]:
        raise MalformedResponse("invoke reply missing outputs")

    outputs = []
    for item in data["outputs"]:
        kind, payload, text = decode_output(item, timeout)
        if text is not None:
            outputs.append({"kind": kind, "text": text})
        else:
            outputs.append({"kind": kind, "artifact_id": store_output(kind, payload)})
    return ToolResult(outputs=outputs, diagnostics=str(data.get("diagnostics", "")))
