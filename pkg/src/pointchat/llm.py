"""Language-model backends for the controller.

The Null backend always answers with empty text, which forces the rule-based
auxiliary path and keeps everything deterministic and offline. The scripted
backend replays canned completions keyed by prompt hash, for reproducible
tests. The HTTP backend adapts any chat-completion endpoint; failures and
timeouts degrade to empty text so the auxiliary path takes over.
"""

from __future__ import annotations

import json
import logging
from hashlib import sha256
from pathlib import Path
from typing import Protocol

import requests

logger = logging.getLogger(__name__)


class LlmBackend(Protocol):
    def complete(self, prompt: str, history: list[dict]) -> str: ...


class NullLlm:
    def complete(self, prompt: str, history: list[dict]) -> str:
        return ""


def prompt_key(prompt: str) -> str:
    """Fixture key for scripted completions."""
    return sha256(prompt.encode("utf-8")).hexdigest()[:16]


class ScriptedLlm:
    """Replays completions from a fixture file mapping prompt hash -> text.

    Unknown prompts answer empty, like the Null backend.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.completions: dict[str, str] = json.loads(self.path.read_text())

    def complete(self, prompt: str, history: list[dict]) -> str:
        return self.completions.get(prompt_key(prompt), "")


class HttpLlm:
    """Chat-completion HTTP adapter (OpenAI-style request shape)."""

    def __init__(self, url: str, model: str = "", auth_token: str = "", timeout: float = 30.0):
        self.url = url
        self.model = model
        self.auth_token = auth_token
        self.timeout = timeout

    def complete(self, prompt: str, history: list[dict]) -> str:
        headers = {"Content-Type": "application/json"}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        body = {
            "model": self.model,
            "messages": list(history) + [{"role": "user", "content": prompt}],
        }
        try:
            resp = requests.post(self.url, json=body, headers=headers, timeout=self.timeout)
            if resp.status_code // 100 != 2:
                logger.warning("llm endpoint returned %s; falling back to empty", resp.status_code)
                return ""
            data = resp.json()
            return str(data["choices"][0]["message"]["content"])
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            logger.warning("llm call failed (%s); falling back to empty", exc)
            return ""


def build_backend(spec: str, timeout: float = 30.0) -> LlmBackend:
    """Backend from a config string: null | scripted:<path> | http:<url>."""
    if spec == "null" or not spec:
        return NullLlm()
    if spec.startswith("scripted:"):
        return ScriptedLlm(spec.split(":", 1)[1])
    if spec.startswith("http:") or spec.startswith("https:"):
        return HttpLlm(spec, timeout=timeout)
    raise ValueError(f"unknown llm backend spec '{spec}'")
