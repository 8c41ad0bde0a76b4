"""Pluggable chat backends and JSON-repair utilities.

Two backends: an HTTP client for any chat-completions-compatible endpoint,
and a deterministic scripted mock for hermetic tests. ``extract_json`` is
the shared routine for digging a JSON value out of model chatter.
"""
from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Sequence

import requests

from .errors import JsonExtractError, LlmError

Message = tuple[str, str]  # (role, content)


@dataclass
class ChatRequest:
    messages: list[Message]
    temperature: float = 0.0
    max_tokens: int = 4096
    model: str = ""

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be nonempty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def prompt_text(self) -> str:
        """All message contents joined, which is what mock matchers see."""
        return "\n".join(content for _, content in self.messages)


class LlmClient:
    """Interface: one blocking chat call in, assistant text out."""

    def chat(self, request: ChatRequest) -> str:
        raise NotImplementedError

    def complete(self, prompt: str, temperature: float = 0.0, max_tokens: int = 4096) -> str:
        """Convenience wrapper for single-user-message requests."""
        return self.chat(
            ChatRequest(messages=[("user", prompt)], temperature=temperature, max_tokens=max_tokens)
        )


class HttpLlmClient(LlmClient):
    """Client for a chat-completions JSON endpoint.

    Sends ``{model, messages, temperature, max_tokens}`` and reads
    ``choices[0].message.content``. Transient transport errors and 5xx
    responses are retried with exponential backoff, at most ``max_retries``
    attempts total.
    """

    def __init__(
        self,
        url: str,
        model: str,
        api_key_env: str = "LLM_API_KEY",
        timeout_s: float = 120.0,
        max_retries: int = 3,
        max_in_flight: int = 8,
    ):
        self.url = url
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self._gate = threading.Semaphore(max_in_flight)

    def chat(self, request: ChatRequest) -> str:
        payload = {
            "model": request.model or self.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.api_key_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"

        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            if attempt:
                time.sleep(min(2 ** attempt, 8))
            try:
                with self._gate:
                    resp = requests.post(
                        self.url, json=payload, headers=headers, timeout=self.timeout_s
                    )
            except requests.RequestException as exc:
                last_error = LlmError(f"transport failure: {exc}", kind="transport")
                continue
            if resp.status_code >= 500:
                last_error = LlmError(f"server error {resp.status_code}", kind="status")
                continue
            if resp.status_code != 200:
                raise LlmError(f"bad status {resp.status_code}: {resp.text[:200]}", kind="status")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError) as exc:
                raise LlmError(f"malformed response body: {exc}", kind="status")
            if not content:
                raise LlmError("empty completion", kind="empty")
            return content
        raise last_error if last_error else LlmError("exhausted retries", kind="transport")


@dataclass
class ScriptEntry:
    """One scripted exchange: a matcher over the prompt text and the reply.

    ``matcher`` is a substring, a compiled regex, or a sequence of substrings
    that must all occur. ``once`` entries are consumed on first use.
    """

    matcher: str | re.Pattern[str] | Sequence[str]
    response: str
    once: bool = False
    used: bool = field(default=False, compare=False)

    def matches(self, prompt: str) -> bool:
        if self.once and self.used:
            return False
        m = self.matcher
        if isinstance(m, str):
            return m in prompt
        if isinstance(m, re.Pattern):
            return m.search(prompt) is not None
        return all(part in prompt for part in m)


class MockLlmClient(LlmClient):
    """Deterministic scripted backend for tests.

    Entries are checked in order; the first match wins. In strict mode an
    unmatched prompt raises ``LlmError`` so transcript drift fails loudly.
    """

    def __init__(self, script: Sequence[ScriptEntry | tuple], strict: bool = True):
        self.entries = [
            e if isinstance(e, ScriptEntry) else ScriptEntry(*e) for e in script
        ]
        self.strict = strict
        self.calls: list[str] = []
        self._lock = threading.Lock()

    def chat(self, request: ChatRequest) -> str:
        prompt = request.prompt_text()
        with self._lock:
            self.calls.append(prompt)
            for entry in self.entries:
                if entry.matches(prompt):
                    entry.used = True
                    return entry.response
        if self.strict:
            raise LlmError(f"no scripted response for prompt: {prompt[:160]!r}", kind="script")
        return ""


class TemperatureOverride(LlmClient):
    """Wraps a client so every request runs at a fixed temperature.

    Single runs pin temperature 0 for stable output; voting runs wrap the
    router with the configured sampling temperature instead.
    """

    def __init__(self, inner: LlmClient, temperature: float):
        self.inner = inner
        self.temperature = temperature

    def chat(self, request: ChatRequest) -> str:
        return self.inner.chat(
            ChatRequest(
                messages=request.messages,
                temperature=self.temperature,
                max_tokens=request.max_tokens,
                model=request.model,
            )
        )


class StageRouter:
    """Maps pipeline stage names to clients, enabling per-stage model mixing.

    Unrouted stages fall back to the ``default`` client.
    """

    STAGES = (
        "describe", "parse", "entities", "align",
        "refine", "solve", "judge", "summarize", "zicl",
    )

    def __init__(self, default: LlmClient, overrides: dict[str, LlmClient] | None = None):
        self.default = default
        self.overrides = dict(overrides or {})

    def for_stage(self, stage: str) -> LlmClient:
        return self.overrides.get(stage, self.default)

    def with_temperature(self, temperature: float) -> "StageRouter":
        return StageRouter(
            TemperatureOverride(self.default, temperature),
            {s: TemperatureOverride(c, temperature) for s, c in self.overrides.items()},
        )


# --- JSON extraction -------------------------------------------------------

_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_+-]*)\s*\n?(.*?)```", re.DOTALL)


def _balanced_slice(text: str, start: int) -> str | None:
    """Return the balanced {...} or [...] slice starting at ``start``."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
            if depth == 0:
                # Mismatched closers (e.g. "{]") are left for json.loads to reject.
                return text[start : i + 1]
    return None


def _repair(text: str) -> str:
    """String-aware pass: drop trailing commas, escape raw control chars in strings."""
    out: list[str] = []
    in_string = False
    escaped = False
    for ch in text:
        if in_string:
            if escaped:
                out.append(ch)
                escaped = False
            elif ch == "\\":
                out.append(ch)
                escaped = True
            elif ch == '"':
                out.append(ch)
                in_string = False
            elif ch == "\n":
                out.append("\\n")
            elif ch == "\t":
                out.append("\\t")
            elif ch == "\r":
                out.append("\\r")
            else:
                out.append(ch)
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
        elif ch in "}]":
            # Remove a trailing comma left hanging before the closer.
            j = len(out) - 1
            while j >= 0 and out[j] in " \t\r\n":
                j -= 1
            if j >= 0 and out[j] == ",":
                del out[j]
            out.append(ch)
        else:
            out.append(ch)
    return "".join(out)


def extract_json(text: str, expect: type | None = None):
    """Pull the first parseable JSON value out of free-form model output.

    Strips code fences, walks candidate ``{``/``[`` openings in order, and
    for each balanced slice tries a strict parse, then a repaired parse
    (trailing commas removed, raw newlines inside strings escaped). ``expect``
    restricts the result type (e.g. ``list``).

    Raises ``JsonExtractError`` when nothing parses.
    """
    sources = [m.group(1) for m in _FENCE_RE.finditer(text)]
    sources.append(text)
    for source in sources:
        for i, ch in enumerate(source):
            if ch not in "{[":
                continue
            if expect is list and ch != "[":
                continue
            if expect is dict and ch != "{":
                continue
            chunk = _balanced_slice(source, i)
            if chunk is None:
                continue
            for attempt in (chunk, _repair(chunk)):
                try:
                    value = json.loads(attempt)
                except ValueError:
                    continue
                if expect is None or isinstance(value, expect):
                    return value
                break  # parsed fine but wrong shape; try the next opening
    raise JsonExtractError(f"no JSON value found in: {text[:160]!r}")
