"""Query parsing, entity linking, and schema pruning.

The flow: decompose the query into sub-queries with column links, align
query-mentioned entities to concrete cell values (character-LCS retrieval
followed by model selection), then cut the global schema down to the
columns that matter.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from . import prompts
from .errors import (
    ColumnNotFoundError,
    JsonExtractError,
    NonStringColumnError,
    SelectionNotInCandidatesError,
)
from .llm import LlmClient, extract_json
from .schema import Table, TableSchema, schema_to_dict, schema_to_json
from .trace import TraceLog, ensure_trace


@dataclass
class LinkingConfig:
    overlap_threshold: float = 0.6
    max_candidates: int = 20

    def __post_init__(self):
        if not 0 < self.overlap_threshold <= 1:
            raise ValueError("overlap_threshold must be in (0, 1]")


@dataclass
class SubQuery:
    index: int
    text: str
    relevant_columns: list[str] = field(default_factory=list)


@dataclass
class EntityMention:
    surface: str
    candidate_columns: list[str] = field(default_factory=list)


@dataclass
class EntityLink:
    mention: EntityMention
    column: str
    aligned_value: str
    overlap: float


@dataclass
class FocusedSchema(TableSchema):
    """A pruned schema plus the entity alignments discovered for the query."""

    entity_notes: list[EntityLink] = field(default_factory=list)


def focused_to_json(focused: FocusedSchema, indent: int | None = 2) -> str:
    data = schema_to_dict(focused)
    if focused.entity_notes:
        data["entity_alignment"] = [
            {
                "query_entity": link.mention.surface,
                "column": link.column,
                "aligned_value": link.aligned_value,
            }
            for link in focused.entity_notes
        ]
    return json.dumps(data, ensure_ascii=False, indent=indent, default=str)


def lcs_length(a: str, b: str) -> int:
    """Classic character-level longest-common-subsequence length."""
    if not a or not b:
        return 0
    if len(b) < len(a):
        a, b = b, a
    prev = [0] * (len(a) + 1)
    for ch in b:
        curr = [0]
        for j, aj in enumerate(a, start=1):
            if ch == aj:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(curr[j - 1], prev[j]))
        prev = curr
    return prev[-1]


def _fold(text: str) -> str:
    # Lowercase and collapse whitespace runs before comparing.
    return " ".join(str(text).lower().split())


def overlap_rate(entity: str, cell: str) -> float:
    """Fraction of the entity's characters recoverable from the cell, in order."""
    folded = _fold(entity)
    if not folded:
        raise ValueError("entity must be nonempty")
    return lcs_length(folded, _fold(cell)) / len(folded)


def retrieve_candidates(
    table: Table, column: str, entity: str, cfg: LinkingConfig | None = None
) -> list[str]:
    """Cell values of a text column whose overlap with the entity beats the threshold.

    Deduplicated, sorted by overlap descending then first occurrence, and
    truncated to ``max_candidates``. Non-string columns raise
    NonStringColumnError, which callers treat as "skip this column".
    """
    cfg = cfg or LinkingConfig()
    try:
        cells = table.column(column)
    except KeyError:
        raise ColumnNotFoundError(column)
    seen: dict[str, int] = {}
    for i, cell in enumerate(cells):
        if cell is None:
            continue
        if not isinstance(cell, str):
            raise NonStringColumnError(f"column {column!r} holds non-string cells")
        if cell not in seen:
            seen[cell] = i
    scored = [
        (overlap_rate(entity, value), first_index, value)
        for value, first_index in seen.items()
    ]
    hits = [t for t in scored if t[0] > cfg.overlap_threshold]
    hits.sort(key=lambda t: (-t[0], t[1]))
    return [value for _, _, value in hits[: cfg.max_candidates]]


def parse_query(
    schema: TableSchema, query: str, llm: LlmClient, trace: TraceLog | None = None
) -> list[SubQuery]:
    """Decompose the query against the global schema (the parsing step).

    Column names absent from the schema are dropped with a warning. Raises
    EmptyDecompositionError if the model yields nothing usable after a retry.
    """
    from .refinement import decompose  # late import; refinement builds on our types

    trace = ensure_trace(trace)
    result = decompose(
        schema_to_json(schema), schema.column_list, query, llm, trace, stage="parse"
    )
    return result.subqueries


def extract_entities(
    schema: TableSchema, query: str, llm: LlmClient, trace: TraceLog | None = None
) -> list[EntityMention]:
    """Ask the model which entities the query mentions and where they may live."""
    trace = ensure_trace(trace)
    prompt = prompts.ENTITY_TEMPLATE.format(table_schema=schema_to_json(schema), query=query)
    text = llm.complete(prompt)
    trace.record("llm", stage="entities", response=text)
    try:
        data = extract_json(text)
    except JsonExtractError:
        trace.warn("entity extraction returned no JSON; assuming no entities")
        return []
    entries = data.get("entities", []) if isinstance(data, dict) else data
    if not isinstance(entries, list):
        trace.warn("entity extraction JSON had unexpected shape; assuming no entities")
        return []
    known = set(schema.column_list)
    mentions = []
    for entry in entries:
        if not isinstance(entry, dict):
            continue
        surface = str(entry.get("entity") or "").strip()
        if not surface:
            continue
        columns = [c for c in entry.get("columns", []) if isinstance(c, str)]
        kept = [c for c in columns if c in known]
        for bad in set(columns) - set(kept):
            trace.warn(f"entity {surface!r}: dropped unknown column {bad!r}")
        mentions.append(EntityMention(surface=surface, candidate_columns=kept))
    return mentions


def select_alignment(
    mention: EntityMention,
    candidates_by_column: dict[str, list[str]],
    llm: LlmClient,
    query: str = "",
    trace: TraceLog | None = None,
) -> EntityLink | None:
    """Have the model pick the one candidate that names the mentioned entity.

    The pick must be verbatim among the candidates; one retry, then the
    mention is treated as unlinkable. An empty candidate map short-circuits
    to None without a model call.
    """
    trace = ensure_trace(trace)
    candidates_by_column = {c: v for c, v in candidates_by_column.items() if v}
    if not candidates_by_column:
        return None
    listing = "\n".join(
        f"- column {col!r}: {vals}" for col, vals in candidates_by_column.items()
    )
    prompt = prompts.ALIGN_TEMPLATE.format(entity=mention.surface, candidates=listing, query=query)
    for attempt in range(2):
        text = llm.complete(
            prompt if attempt == 0 else prompt + "\nThe value must be copied exactly from the candidate list."
        )
        trace.record("llm", stage="align", attempt=attempt, response=text)
        try:
            data = extract_json(text, expect=dict)
            column = data.get("column")
            value = data.get("value")
            if column is None or value is None or str(value).lower() == "null":
                return None  # explicit decline
            column, value = str(column), str(value)
            if value not in candidates_by_column.get(column, []):
                raise SelectionNotInCandidatesError(
                    f"{value!r} was not offered for column {column!r}"
                )
            return EntityLink(
                mention=mention,
                column=column,
                aligned_value=value,
                overlap=overlap_rate(mention.surface, value),
            )
        except (JsonExtractError, SelectionNotInCandidatesError):
            continue
    trace.warn(f"alignment for {mention.surface!r} was never a verbatim candidate; dropping")
    return None


def link_entities(
    table: Table,
    schema: TableSchema,
    query: str,
    llm: LlmClient,
    cfg: LinkingConfig | None = None,
    trace: TraceLog | None = None,
) -> list[EntityLink]:
    """Full entity-linking pass: extract mentions, retrieve by LCS, select."""
    cfg = cfg or LinkingConfig()
    trace = ensure_trace(trace)
    links = []
    for mention in extract_entities(schema, query, llm, trace):
        columns = mention.candidate_columns or schema.column_list
        candidates: dict[str, list[str]] = {}
        for column in columns:
            try:
                values = retrieve_candidates(table, column, mention.surface, cfg)
            except (NonStringColumnError, ColumnNotFoundError):
                continue
            if values:
                candidates[column] = values
        link = select_alignment(mention, candidates, llm, query=query, trace=trace)
        if link is not None:
            links.append(link)
    return links


def refine_schema(
    schema: TableSchema,
    subqueries: list[SubQuery],
    links: list[EntityLink],
    trace: TraceLog | None = None,
) -> FocusedSchema:
    """Prune the schema to the linked columns and attach entity alignments.

    Column order follows the original schema. An empty union keeps every
    column (a focused schema must never be empty).
    """
    wanted = set()
    for sq in subqueries:
        wanted.update(sq.relevant_columns)
    for link in links:
        wanted.add(link.column)
    keep = [c for c in schema.column_list if c in wanted] or list(schema.column_list)
    keep_set = set(keep)
    return FocusedSchema(
        file_path=schema.file_path,
        table_name=schema.table_name,
        table_description=schema.table_description,
        number_of_rows=schema.number_of_rows,
        column_list=keep,
        column_description=[
            dataclasses.replace(p) for p in schema.column_description if p.column_name in keep_set
        ],
        cell_example=[
            {col: row[col] for col in keep if col in row} for row in schema.cell_example
        ],
        entity_notes=list(links),
    )
