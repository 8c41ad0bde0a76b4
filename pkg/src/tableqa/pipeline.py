"""End-to-end question answering: one Engine object wires every stage.

Strategies:
  - ``answer``      schema -> linking -> iterative code loop -> summary
  - ``answer_zicl``  render the table as Markdown and ask directly
  - ``answer_codebased``  one-shot code generation over the Markdown table,
    executed and routed through the same answer summary
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import answers as answers_mod
from . import linking as linking_mod
from . import loop as loop_mod
from . import prompts
from . import schema as schema_mod
from . import solver as solver_mod
from .answers import TypedAnswer, VoteConfig
from .errors import JsonExtractError
from .linking import LinkingConfig
from .llm import LlmClient, StageRouter, extract_json
from .loop import LoopConfig, LoopDeps, ReasoningState
from .schema import SchemaConfig, Table
from .solver import Executor, FakeExecutor, SandboxConfig
from .trace import TraceLog, ensure_trace


@dataclass
class EngineConfig:
    schema: SchemaConfig = field(default_factory=SchemaConfig)
    linking: LinkingConfig = field(default_factory=LinkingConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    sandbox: SandboxConfig = field(default_factory=SandboxConfig)
    vote: VoteConfig = field(default_factory=VoteConfig)
    describe: bool = True
    zicl_max_rows: int = 100


class Engine:
    """Question-answering engine over a pluggable LLM router and executor."""

    def __init__(
        self,
        llms: StageRouter | LlmClient,
        executor: Executor | None = None,
        cfg: EngineConfig | None = None,
        trace: TraceLog | None = None,
    ):
        self.llms = llms if isinstance(llms, StageRouter) else StageRouter(llms)
        self.executor = executor if executor is not None else FakeExecutor([])
        self.cfg = cfg or EngineConfig()
        self.trace = ensure_trace(trace)

    # -- full pipeline -----------------------------------------------------

    def prepare_focus(self, table: Table, question: str) -> linking_mod.FocusedSchema:
        """Schema build + optional description + linking, done once per question."""
        cfg = self.cfg
        schema = schema_mod.build_schema(table, cfg.schema)
        if cfg.describe:
            schema = schema_mod.describe_schema(
                schema, self.llms.for_stage("describe"), self.trace
            )
        subqueries = linking_mod.parse_query(
            schema, question, self.llms.for_stage("parse"), self.trace
        )
        links = linking_mod.link_entities(
            table, schema, question, self.llms.for_stage("entities"), cfg.linking, self.trace
        )
        return linking_mod.refine_schema(schema, subqueries, links, self.trace)

    def reason(self, table: Table, question: str) -> tuple[ReasoningState, linking_mod.FocusedSchema]:
        focused = self.prepare_focus(table, question)
        deps = LoopDeps(
            llm_refine=self.llms.for_stage("refine"),
            llm_solve=self.llms.for_stage("solve"),
            llm_judge=self.llms.for_stage("judge"),
            executor=self.executor,
            sandbox=self.cfg.sandbox,
            table_path=table.path,
            trace=self.trace,
        )
        state = loop_mod.run(question, focused, self.cfg.loop, deps)
        return state, focused

    def answer(
        self, table: Table, question: str, expected_kind: str | None = None
    ) -> tuple[TypedAnswer, ReasoningState]:
        """Answer one question with the full iterative pipeline."""
        state, _ = self.reason(table, question)
        raw = answers_mod.summarize(
            question, state, self.llms.for_stage("summarize"), self.trace
        )
        answer = answers_mod.normalize_answer(raw, expected_kind)
        self.trace.record(
            "answer",
            question=question,
            answer_kind=answer.kind,
            value=answers_mod.canonical_text(answer),
            loop_status=state.status,
        )
        return answer, state

    def answer_voted(
        self, table: Table, question: str, expected_kind: str | None = None
    ) -> TypedAnswer:
        """Run the whole pipeline k times at sampling temperature and vote."""
        sampling = Engine(
            self.llms.with_temperature(self.cfg.vote.temperature),
            self.executor,
            self.cfg,
            self.trace,
        )
        runs = [
            sampling.answer(table, question, expected_kind)[0]
            for _ in range(self.cfg.vote.k)
        ]
        voted = answers_mod.majority_vote(runs, self.cfg.vote)
        self.trace.record(
            "vote",
            question=question,
            k=self.cfg.vote.k,
            winner=answers_mod.canonical_text(voted),
        )
        return voted

    # -- baselines -----------------------------------------------------------

    def answer_zicl(
        self, table: Table, question: str, expected_kind: str | None = None
    ) -> TypedAnswer:
        """Zero-shot in-context baseline over the Markdown-rendered table."""
        from .evaluator import to_markdown  # local import, evaluator imports us

        rendered = to_markdown(table, self.cfg.zicl_max_rows)
        prompt = prompts.ZICL_TEMPLATE.format(question=question, table_data=rendered)
        text = self.llms.for_stage("zicl").complete(prompt)
        self.trace.record("llm", stage="zicl", response=text)
        try:
            data = extract_json(text, expect=dict)
            raw = data.get("answer")
            raw = _answer_text(raw)
        except JsonExtractError:
            raw = text.strip().splitlines()[-1] if text.strip() else ""
        return answers_mod.normalize_answer(raw, expected_kind)

    def answer_codebased(
        self, table: Table, question: str, expected_kind: str | None = None
    ) -> TypedAnswer:
        """Single-shot code generation baseline, summarized like the pipeline."""
        from .evaluator import to_markdown

        rendered = to_markdown(table, self.cfg.zicl_max_rows)
        prompt = prompts.CODE_TEMPLATE.format(
            question=question,
            table_path=Path(table.path).name,
            table_data=rendered,
        )
        solution = solver_mod.request_solution(
            prompt, self.llms.for_stage("solve"), self.trace
        )
        observation = solver_mod.execute(
            solution, table.path, self.cfg.sandbox, self.executor
        )
        state = ReasoningState(original_query=question)
        state.history.append(
            loop_mod.CycleRecord(
                round=1,
                query_text=question,
                thought=solution.code_thought,
                action_code=solution.code,
                observation=observation,
            )
        )
        raw = answers_mod.summarize(
            question, state, self.llms.for_stage("summarize"), self.trace
        )
        return answers_mod.normalize_answer(raw, expected_kind)


def _answer_text(value) -> str:
    """Render a JSON answer field the way the normalizer expects raw text."""
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, list):
        return "[" + ", ".join(repr(v) if isinstance(v, str) else str(v) for v in value) + "]"
    if value is None:
        return ""
    return str(value)
