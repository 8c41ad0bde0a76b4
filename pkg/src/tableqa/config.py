"""Run configuration: one YAML/JSON document wiring stages to backends.

Example::

    endpoints:
      main:  {kind: http, url: "http://localhost:8000/v1/chat/completions", model: qwen}
      coder: {kind: http, url: "http://localhost:8001/v1/chat/completions", model: coder}
    stages:
      default: main
      solve: coder          # per-stage model mixing is pure configuration
    schema:  {sample_rows_k: 3, rng_seed: 13}
    linking: {overlap_threshold: 0.6, max_candidates: 20}
    loop:    {max_rounds: 5, temperature: 0.0}
    sandbox: {interpreter_command: ["python3", "runner/sandbox_runner.py"], timeout_s: 30}
    vote:    {k: 5, temperature: 0.7}
    compare: {numeric_rel_tol: 1.0e-3, numeric_abs_tol: 1.0e-6}
    api_key_env: LLM_API_KEY
    describe: true
    trace_path: traces/run.jsonl

Mock endpoints (``kind: mock``) load a JSON script file of
``{"match": ..., "response": ..., "once": false}`` entries, where ``match``
is a substring or a list of substrings; they keep CLI runs hermetic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .answers import VoteConfig
from .errors import ConfigError
from .evaluator import CompareConfig
from .linking import LinkingConfig
from .llm import HttpLlmClient, LlmClient, MockLlmClient, ScriptEntry, StageRouter
from .loop import LoopConfig
from .pipeline import EngineConfig
from .schema import SchemaConfig
from .solver import Executor, FakeExecutor, FakeResult, SandboxConfig, SubprocessExecutor


@dataclass
class RunConfig:
    endpoints: dict[str, dict] = field(default_factory=dict)
    stages: dict[str, str] = field(default_factory=dict)
    schema: SchemaConfig = field(default_factory=SchemaConfig)
    linking: LinkingConfig = field(default_factory=LinkingConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    sandbox: SandboxConfig = field(default_factory=SandboxConfig)
    vote: VoteConfig = field(default_factory=VoteConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)
    api_key_env: str = "LLM_API_KEY"
    describe: bool = True
    trace_path: str | None = None
    executor_kind: str = "subprocess"
    executor_scripts: list[dict] = field(default_factory=list)

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            schema=self.schema,
            linking=self.linking,
            loop=self.loop,
            sandbox=self.sandbox,
            vote=self.vote,
            describe=self.describe,
        )


def _section(data: dict, key: str, cls):
    try:
        return cls(**data.get(key, {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {key!r} section: {exc}") from exc


def load_config(path: str | Path | None) -> RunConfig:
    """Parse and validate a config file; None yields library defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML/JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")

    endpoints = data.get("endpoints", {})
    stages = data.get("stages", {})
    if not isinstance(endpoints, dict) or not isinstance(stages, dict):
        raise ConfigError("endpoints and stages must be mappings")
    for stage, endpoint in stages.items():
        if endpoint not in endpoints:
            raise ConfigError(f"stage {stage!r} references undefined endpoint {endpoint!r}")
    for name, spec in endpoints.items():
        if not isinstance(spec, dict) or spec.get("kind") not in ("http", "mock"):
            raise ConfigError(f"endpoint {name!r} must set kind: http or kind: mock")
        if spec["kind"] == "http" and not spec.get("url"):
            raise ConfigError(f"http endpoint {name!r} needs a url")
        if spec["kind"] == "mock" and not spec.get("script"):
            raise ConfigError(f"mock endpoint {name!r} needs a script file")

    cfg = RunConfig(
        endpoints=endpoints,
        stages=stages,
        schema=_section(data, "schema", SchemaConfig),
        linking=_section(data, "linking", LinkingConfig),
        loop=_section(data, "loop", LoopConfig),
        sandbox=_section(data, "sandbox", SandboxConfig),
        vote=_section(data, "vote", VoteConfig),
        compare=_section(data, "compare", CompareConfig),
        api_key_env=data.get("api_key_env", "LLM_API_KEY"),
        describe=bool(data.get("describe", True)),
        trace_path=data.get("trace_path"),
        executor_kind=data.get("executor", "subprocess"),
        executor_scripts=list(data.get("executor_scripts", [])),
    )
    if cfg.executor_kind not in ("subprocess", "fake"):
        raise ConfigError(f"unknown executor kind: {cfg.executor_kind!r}")
    return cfg


def _load_mock_script(path: Path) -> list[ScriptEntry]:
    try:
        entries = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read mock script {path}: {exc}") from exc
    script = []
    for entry in entries:
        match = entry.get("match")
        if isinstance(match, list):
            match = tuple(match)
        script.append(
            ScriptEntry(
                matcher=match,
                response=str(entry.get("response", "")),
                once=bool(entry.get("once", False)),
            )
        )
    return script


def _build_client(spec: dict, cfg: RunConfig, base_dir: Path) -> LlmClient:
    if spec["kind"] == "http":
        return HttpLlmClient(
            url=spec["url"],
            model=spec.get("model", ""),
            api_key_env=spec.get("api_key_env", cfg.api_key_env),
            timeout_s=float(spec.get("timeout_s", 120)),
        )
    script_path = Path(spec["script"])
    if not script_path.is_absolute():
        script_path = base_dir / script_path
    return MockLlmClient(_load_mock_script(script_path), strict=bool(spec.get("strict", True)))


def build_router(cfg: RunConfig, base_dir: str | Path = ".") -> StageRouter:
    """Instantiate one client per endpoint and wire the stage map."""
    if not cfg.endpoints:
        raise ConfigError("no endpoints configured; supply a config file")
    base_dir = Path(base_dir)
    clients = {name: _build_client(spec, cfg, base_dir) for name, spec in cfg.endpoints.items()}
    default_name = cfg.stages.get("default") or next(iter(clients))
    overrides = {
        stage: clients[endpoint]
        for stage, endpoint in cfg.stages.items()
        if stage != "default"
    }
    return StageRouter(clients[default_name], overrides)


def build_executor(cfg: RunConfig) -> Executor:
    if cfg.executor_kind == "fake":
        results = [
            FakeResult(
                matcher=entry.get("match", ""),
                stdout=str(entry.get("stdout", "")),
                stderr=str(entry.get("stderr", "")),
                status=str(entry.get("status", "ok")),
            )
            for entry in cfg.executor_scripts
        ]
        return FakeExecutor(results)
    return SubprocessExecutor()
