"""Query decomposition into progressive sub-queries with column links."""
from __future__ import annotations

import re

from dataclasses import dataclass

from . import prompts
from .errors import EmptyDecompositionError, JsonExtractError
from .linking import FocusedSchema, SubQuery, focused_to_json
from .llm import LlmClient, extract_json
from .trace import TraceLog, ensure_trace

_QUERY_KEY_RE = re.compile(r"^query\s*_?\s*(\d+)$", re.IGNORECASE)


@dataclass
class RefinementResult:
    subqueries: list[SubQuery]
    raw_response: str = ""


def parse_subquery_json(
    text: str, allowed_columns: list[str], trace: TraceLog | None = None
) -> list[SubQuery]:
    """Parse a model decomposition into SubQuery objects.

    Expects the first balanced JSON array of ``{"QueryN": ..., "relevant_column_list":
    [...]}`` objects. Entries without a query string are dropped, QueryN keys are
    honored in ascending N, and the result is re-indexed 1..S. Column names not in
    ``allowed_columns`` are pruned with a warning.
    """
    trace = ensure_trace(trace)
    data = extract_json(text, expect=list)
    allowed = set(allowed_columns)
    found: list[tuple[int, str, list[str]]] = []
    for position, entry in enumerate(data):
        if not isinstance(entry, dict):
            continue
        columns = [c for c in entry.get("relevant_column_list", []) if isinstance(c, str)]
        for key, value in entry.items():
            match = _QUERY_KEY_RE.match(str(key).strip())
            if not match or not isinstance(value, str) or not value.strip():
                continue
            found.append((int(match.group(1)), value.strip(), columns))
            break
        else:
            if entry:
                trace.warn(f"decomposition entry {position} lacks a QueryN string; dropped")
    found.sort(key=lambda item: item[0])

    subqueries = []
    for index, (_, text_value, columns) in enumerate(found, start=1):
        kept = [c for c in columns if c in allowed]
        for bad in [c for c in columns if c not in allowed]:
            trace.warn(f"sub-query {index}: dropped unknown column {bad!r}")
        subqueries.append(SubQuery(index=index, text=text_value, relevant_columns=kept))
    return subqueries


def decompose(
    schema_json: str,
    allowed_columns: list[str],
    query: str,
    llm: LlmClient,
    trace: TraceLog | None = None,
    stage: str = "refine",
) -> RefinementResult:
    """Run the decomposition prompt and parse it, with one JSON-repair retry.

    Raises EmptyDecompositionError when both attempts yield nothing usable.
    """
    trace = ensure_trace(trace)
    prompt = prompts.DECOMPOSE_TEMPLATE.format(table_schema=schema_json, query=query)
    last_response = ""
    for attempt in range(2):
        last_response = llm.complete(
            prompt if attempt == 0 else prompt + prompts.JSON_REMINDER
        )
        trace.record("llm", stage=stage, attempt=attempt, response=last_response)
        try:
            subqueries = parse_subquery_json(last_response, allowed_columns, trace)
        except JsonExtractError:
            continue
        if subqueries:
            return RefinementResult(subqueries=subqueries, raw_response=last_response)
    raise EmptyDecompositionError(
        f"no usable sub-queries after retry; last response: {last_response[:160]!r}"
    )


def refine_query(
    focused: FocusedSchema, query: str, llm: LlmClient, trace: TraceLog | None = None
) -> RefinementResult:
    """Decompose the query against the focused schema (denser, de-noised)."""
    return decompose(
        focused_to_json(focused), focused.column_list, query, llm, trace, stage="refine"
    )
