"""Bounded thought-action-observation reasoning loop.

Each cycle refines the current query into sub-queries (the thought),
generates and executes code (the action), and records the execution
feedback (the observation). A judge model then either declares the task
complete or supplies an improved follow-up query for the next cycle, up to
a hard round limit.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import prompts, refinement as refinement_mod, solver as solver_mod
from .errors import (
    EmptyDecompositionError,
    InvalidStateError,
    JsonExtractError,
    LlmError,
)
from .linking import FocusedSchema, focused_to_json
from .llm import LlmClient
from .solver import Executor, Observation, SandboxConfig, STATUS_LAUNCH_FAILURE
from .trace import TraceLog, ensure_trace

STATUS_RUNNING = "running"
STATUS_DONE = "done"
STATUS_EXHAUSTED = "exhausted"

# Captures run to the next bold header (or the end) so trailing sections
# of a chatty reply do not leak into the extracted text.
_RESPONSE_RE = re.compile(r"\*\*Response\*\*\s*:?\s*(.*?)(?:\n\s*\*\*|\Z)", re.DOTALL)
_FOLLOWUP_RE = re.compile(r"\*\*Query\*\*\s*:?\s*(.*?)(?:\n\s*\*\*|\Z)", re.DOTALL)


@dataclass
class LoopConfig:
    max_rounds: int = 5
    temperature: float = 0.0

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


@dataclass(frozen=True)
class CycleRecord:
    round: int
    query_text: str
    thought: str
    action_code: str
    observation: Observation


@dataclass
class ReasoningState:
    original_query: str
    history: list[CycleRecord] = field(default_factory=list)
    status: str = STATUS_RUNNING
    final_thought: str | None = None
    next_query: str = ""

    def __post_init__(self):
        if not self.next_query:
            self.next_query = self.original_query


@dataclass(frozen=True)
class Done:
    final_thought: str


@dataclass(frozen=True)
class FollowUp:
    query: str


@dataclass
class LoopDeps:
    """Runtime services the loop hands to the per-cycle pipeline stages."""

    llm_refine: LlmClient
    llm_solve: LlmClient
    llm_judge: LlmClient
    executor: Executor
    sandbox: SandboxConfig
    table_path: str
    trace: TraceLog | None = None


def run_cycle(state: ReasoningState, focused: FocusedSchema, deps: LoopDeps) -> ReasoningState:
    """Execute one refine -> solve -> execute cycle and append its record.

    Upstream stage failures never abort the loop; they are folded into the
    cycle's observation so the judge can react to them.
    """
    if state.status != STATUS_RUNNING:
        raise InvalidStateError(f"cannot run a cycle on a {state.status} state")
    trace = ensure_trace(deps.trace)
    query = state.next_query
    round_no = len(state.history) + 1
    thought = ""
    code = ""
    try:
        result = refinement_mod.refine_query(focused, query, deps.llm_refine, trace)
        thought = "\n".join(
            f"{sq.index}. {sq.text}"
            + (f" [columns: {', '.join(sq.relevant_columns)}]" if sq.relevant_columns else "")
            for sq in result.subqueries
        )
        solution = solver_mod.generate_solution(
            focused, result, deps.table_path, deps.llm_solve, query=query, trace=trace
        )
        code = solution.code
        observation = solver_mod.execute(solution, deps.table_path, deps.sandbox, deps.executor)
    except (LlmError, EmptyDecompositionError, JsonExtractError) as exc:
        trace.warn(f"cycle {round_no} stage failure: {exc}")
        observation = Observation(
            stderr=f"{type(exc).__name__}: {exc}", status=STATUS_LAUNCH_FAILURE
        )
    record = CycleRecord(
        round=round_no,
        query_text=query,
        thought=thought,
        action_code=code,
        observation=observation,
    )
    state.history.append(record)
    trace.record(
        "cycle",
        round=round_no,
        query=query,
        thought=thought,
        code=code,
        observation_status=observation.status,
        observation_stdout=observation.stdout,
        observation_stderr=observation.stderr,
    )
    return state


def judge_completion(
    state: ReasoningState,
    llm: LlmClient,
    focused: FocusedSchema | None = None,
    trace: TraceLog | None = None,
) -> Done | FollowUp:
    """Decide whether the recorded cycles already answer the question.

    The completion marker means Done (with the text after ``**Response**:``
    as the closing thought); a ``**Query**:`` capture means a follow-up.
    Anything unparseable conservatively becomes a follow-up that reuses the
    original query.
    """
    if not state.history:
        raise InvalidStateError("judge needs at least one recorded cycle")
    trace = ensure_trace(trace)
    prompt = prompts.JUDGE_TEMPLATE.format(
        table_schema=focused_to_json(focused) if focused is not None else "(schema omitted)",
        query=state.original_query,
        history_thinking=prompts.render_history(state.history),
    )
    text = llm.complete(prompt)
    trace.record("llm", stage="judge", response=text)
    if prompts.COMPLETION_MARKER.lower() in text.lower():
        match = _RESPONSE_RE.search(text)
        return Done(final_thought=match.group(1).strip() if match else "")
    match = _FOLLOWUP_RE.search(text)
    if match and match.group(1).strip():
        return FollowUp(query=match.group(1).strip())
    trace.warn("judge response matched neither format; retrying with the original query")
    return FollowUp(query=state.original_query)


def run(
    query: str,
    focused: FocusedSchema,
    cfg: LoopConfig,
    deps: LoopDeps,
) -> ReasoningState:
    """Drive cycles until the judge is satisfied or rounds run out.

    Exhausted states still flow on to answer summary; partial history is
    better than no answer.
    """
    trace = ensure_trace(deps.trace)
    state = ReasoningState(original_query=query)
    for _ in range(cfg.max_rounds):
        run_cycle(state, focused, deps)
        decision = judge_completion(state, deps.llm_judge, focused, trace)
        if isinstance(decision, Done):
            state.status = STATUS_DONE
            state.final_thought = decision.final_thought
            break
        state.next_query = decision.query
    else:
        state.status = STATUS_EXHAUSTED
    trace.record(
        "loop_end",
        status=state.status,
        rounds=len(state.history),
        final_thought=state.final_thought,
    )
    return state
