"""Code-solution generation and sandboxed execution.

The model writes an analysis script; an Executor runs it and reports an
Observation. Executors come in two flavors: a scripted in-memory fake that
keeps the test suite hermetic, and a subprocess client that launches the
external runner harness and parses its sentinel-delimited JSON envelope.
The engine never interprets the generated code itself.
"""
from __future__ import annotations

import hashlib
import json
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import prompts
from .errors import JsonExtractError
from .linking import FocusedSchema, focused_to_json
from .llm import LlmClient, extract_json
from .refinement import RefinementResult
from .trace import TraceLog, ensure_trace

ENVELOPE_SENTINEL = "###ENVELOPE###"

STATUS_OK = "ok"
STATUS_NONZERO = "nonzero_exit"
STATUS_TIMEOUT = "timeout"
STATUS_LAUNCH_FAILURE = "launch_failure"

_TRUNCATION_MARKER = "...[truncated]"


@dataclass
class SandboxConfig:
    interpreter_command: list[str] = field(default_factory=lambda: ["python3"])
    timeout_s: int = 30
    output_cap_bytes: int = 65536
    workdir_policy: str = "temp_copy"

    def __post_init__(self):
        if self.timeout_s < 1:
            raise ValueError("timeout_s must be >= 1")


@dataclass
class PotSolution:
    code_thought: str
    code: str
    raw_response: str = ""


@dataclass
class Observation:
    stdout: str = ""
    stderr: str = ""
    status: str = STATUS_OK
    duration_ms: int = 0


def _cap(text: str, cap_bytes: int) -> str:
    encoded = text.encode("utf-8", errors="replace")
    if len(encoded) <= cap_bytes:
        return text
    return encoded[:cap_bytes].decode("utf-8", errors="replace") + _TRUNCATION_MARKER


def _unescape_code(code: str) -> str:
    # Models sometimes double-escape; only rewrite when no real newlines exist.
    if "\\n" in code and "\n" not in code:
        code = code.replace("\\n", "\n").replace("\\t", "\t")
    return code


def request_solution(prompt: str, llm: LlmClient, trace: TraceLog | None = None) -> PotSolution:
    """Run a code-generation prompt and parse the code_thought/code object.

    One JSON-repair retry; raises JsonExtractError when no code survives.
    """
    trace = ensure_trace(trace)
    last = ""
    for attempt in range(2):
        last = llm.complete(prompt if attempt == 0 else prompt + prompts.JSON_REMINDER)
        trace.record("llm", stage="solve", attempt=attempt, response=last)
        try:
            data = extract_json(last, expect=dict)
        except JsonExtractError:
            continue
        code = data.get("code")
        if isinstance(code, str) and code.strip():
            return PotSolution(
                code_thought=str(data.get("code_thought") or ""),
                code=_unescape_code(code),
                raw_response=last,
            )
    raise JsonExtractError(f"no code object in solver response: {last[:160]!r}")


def generate_solution(
    focused: FocusedSchema,
    refinement: RefinementResult,
    table_path: str,
    llm: LlmClient,
    query: str = "",
    trace: TraceLog | None = None,
) -> PotSolution:
    """Prompt for a code solution built on the focused schema and sub-query plan."""
    plan = "\n".join(
        f"{sq.index}. {sq.text}" + (f" (columns: {', '.join(sq.relevant_columns)})" if sq.relevant_columns else "")
        for sq in refinement.subqueries
    )
    question = query or (refinement.subqueries[0].text if refinement.subqueries else "")
    prompt = prompts.CODE_TEMPLATE.format(
        question=f"{question}\nFollow this plan:\n{plan}" if plan else question,
        table_path=Path(table_path).name,
        table_data=focused_to_json(focused),
    )
    return request_solution(prompt, llm, trace)


class Executor:
    """Runs one script in a prepared working directory and reports back."""

    def run(self, code: str, workdir: Path, cfg: SandboxConfig) -> Observation:
        raise NotImplementedError


@dataclass
class FakeResult:
    """Scripted outcome for the in-memory executor."""

    matcher: str | re.Pattern[str]
    stdout: str = ""
    stderr: str = ""
    status: str = STATUS_OK

    def matches(self, code: str) -> bool:
        if isinstance(self.matcher, str):
            return self.matcher in code
        return self.matcher.search(code) is not None


class FakeExecutor(Executor):
    """In-memory executor: first matching scripted result wins.

    Unmatched code yields a launch_failure observation, so a broken
    transcript shows up in the loop history instead of crashing the test.
    """

    def __init__(self, results: Sequence[FakeResult | tuple]):
        self.results = [r if isinstance(r, FakeResult) else FakeResult(*r) for r in results]
        self.runs: list[str] = []

    def run(self, code: str, workdir: Path, cfg: SandboxConfig) -> Observation:
        self.runs.append(code)
        for result in self.results:
            if result.matches(code):
                return Observation(
                    stdout=_cap(result.stdout, cfg.output_cap_bytes),
                    stderr=_cap(result.stderr, cfg.output_cap_bytes),
                    status=result.status,
                    duration_ms=1,
                )
        return Observation(
            stderr=f"no scripted execution for code: {code[:120]!r}",
            status=STATUS_LAUNCH_FAILURE,
        )


def parse_envelope(stdout_text: str) -> dict:
    """Extract the runner's JSON envelope following the last sentinel line.

    Everything before the sentinel is payload noise and is ignored.
    """
    lines = stdout_text.splitlines()
    for i in range(len(lines) - 1, -1, -1):
        if lines[i].strip() == ENVELOPE_SENTINEL:
            rest = "\n".join(lines[i + 1 :]).strip()
            return json.loads(rest)
    raise ValueError("no envelope sentinel in runner output")


class SubprocessExecutor(Executor):
    """Launches the external runner harness: ``<interpreter> runner payload timeout``.

    The harness prints a sentinel line followed by a one-line JSON envelope;
    its timeout enforcement is mirrored here with a grace period in case the
    harness itself wedges.
    """

    GRACE_S = 10

    def run(self, code: str, workdir: Path, cfg: SandboxConfig) -> Observation:
        payload = workdir / "payload.py"
        payload.write_text(code, encoding="utf-8")
        command = [*cfg.interpreter_command, str(payload), str(cfg.timeout_s)]
        started = time.monotonic()
        try:
            proc = subprocess.run(
                command,
                cwd=workdir,
                capture_output=True,
                text=True,
                timeout=cfg.timeout_s + self.GRACE_S,
            )
        except subprocess.TimeoutExpired:
            return Observation(
                stderr="runner exceeded its grace period and was killed",
                status=STATUS_TIMEOUT,
                duration_ms=int((time.monotonic() - started) * 1000),
            )
        except OSError as exc:
            return Observation(
                stderr=f"could not launch runner: {exc}",
                status=STATUS_LAUNCH_FAILURE,
                duration_ms=int((time.monotonic() - started) * 1000),
            )
        duration_ms = int((time.monotonic() - started) * 1000)
        try:
            envelope = parse_envelope(proc.stdout)
        except (ValueError, json.JSONDecodeError):
            return Observation(
                stdout=_cap(proc.stdout, cfg.output_cap_bytes),
                stderr=_cap(proc.stderr or "runner produced no envelope", cfg.output_cap_bytes),
                status=STATUS_LAUNCH_FAILURE,
                duration_ms=duration_ms,
            )
        status_map = {"ok": STATUS_OK, "error": STATUS_NONZERO, "timeout": STATUS_TIMEOUT}
        return Observation(
            stdout=_cap(str(envelope.get("stdout", "")), cfg.output_cap_bytes),
            stderr=_cap(str(envelope.get("stderr", "")), cfg.output_cap_bytes),
            status=status_map.get(str(envelope.get("status")), STATUS_LAUNCH_FAILURE),
            duration_ms=int(envelope.get("duration_ms", duration_ms)),
        )


def _file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def execute(
    solution: PotSolution,
    table_path: str,
    cfg: SandboxConfig,
    backend: Executor,
) -> Observation:
    """Run a solution in a fresh temp directory holding a copy of the table.

    The copy means generated code can use bare relative paths, and the
    source table can never be mutated. Failures of any kind come back as
    Observation statuses, never exceptions.
    """
    source = Path(table_path)
    workdir = Path(tempfile.mkdtemp(prefix="tableqa-run-"))
    try:
        if source.exists():
            shutil.copy2(source, workdir / source.name)
        try:
            return backend.run(solution.code, workdir, cfg)
        except Exception as exc:  # backend bugs become observations too
            return Observation(stderr=f"executor failure: {exc}", status=STATUS_LAUNCH_FAILURE)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
