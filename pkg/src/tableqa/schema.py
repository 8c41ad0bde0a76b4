"""Table loading, per-column profiling, and the compact schema JSON.

A table is profiled into a schema whose serialized size is bounded by the
column count and the sampled-row count K, never by the row count: numeric
columns carry four summary statistics, categorical columns carry capped
category listings, and only K sampled rows are embedded as examples. The
schema can optionally be enriched with model-written descriptions.
"""
from __future__ import annotations

import dataclasses
import json
import math
import random
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

import numpy as np
import pandas as pd

from . import prompts
from .errors import JsonExtractError, MalformedFileError, UnsupportedFormatError
from .llm import LlmClient, extract_json
from .trace import TraceLog, ensure_trace

DTYPES = ("numeric", "categorical", "text", "boolean", "datetime", "unknown")

_BOOL_TOKENS = {"true", "false", "yes", "no", "0", "1"}
_DATE_PATTERNS = ("%Y/%m/%d", "%d/%m/%Y", "%m/%d/%Y", "%Y%m%d")


@dataclass
class SchemaConfig:
    """Knobs for schema construction: K sampled rows and listing caps."""

    sample_rows_k: int = 3
    rng_seed: int = 13
    max_listed_categories: int = 20
    top_frequent_items: int = 5

    def __post_init__(self):
        if self.sample_rows_k < 1:
            raise ValueError("sample_rows_k must be >= 1")


@dataclass
class Table:
    """An in-memory table: ordered (name, cells) columns of equal length."""

    path: str
    name: str
    columns: list[tuple[str, list]]
    row_count: int
    col_count: int

    @classmethod
    def from_columns(cls, path: str, name: str, columns: list[tuple[str, list]]) -> "Table":
        columns = [(str(col).strip(), cells) for col, cells in columns]
        names = [col for col, _ in columns]
        if len(set(names)) != len(names):
            raise MalformedFileError(f"duplicate column names after trimming: {names}")
        lengths = {len(cells) for _, cells in columns}
        if len(lengths) > 1:
            raise MalformedFileError(f"ragged columns, lengths {sorted(lengths)}")
        rows = lengths.pop() if lengths else 0
        return cls(path=path, name=name, columns=columns, row_count=rows, col_count=len(columns))

    @property
    def column_names(self) -> list[str]:
        return [col for col, _ in self.columns]

    def column(self, name: str) -> list:
        for col, cells in self.columns:
            if col == name:
                return cells
        raise KeyError(name)

    def row(self, index: int) -> dict:
        return {col: cells[index] for col, cells in self.columns}


def _scalar(value):
    """Normalize a pandas cell to a plain Python scalar or None."""
    if value is None:
        return None
    try:
        if pd.isna(value):
            return None
    except (TypeError, ValueError):
        pass
    if isinstance(value, pd.Timestamp):
        return value.to_pydatetime()
    if isinstance(value, np.generic):
        return value.item()
    return value


def load_table(path: str | Path) -> Table:
    """Read a CSV or Parquet file into a Table.

    Raises FileNotFoundError, UnsupportedFormatError, or MalformedFileError
    (empty file, or rows the reader cannot reconcile).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    suffix = path.suffix.lower()
    try:
        if suffix == ".csv":
            df = pd.read_csv(path)
        elif suffix == ".parquet":
            df = pd.read_parquet(path)
        else:
            raise UnsupportedFormatError(f"unsupported table format: {suffix or '(none)'}")
    except UnsupportedFormatError:
        raise
    except pd.errors.EmptyDataError as exc:
        raise MalformedFileError(f"{path}: empty file") from exc
    except (pd.errors.ParserError, ValueError, OSError) as exc:
        raise MalformedFileError(f"{path}: {exc}") from exc
    columns = [(str(col), [_scalar(v) for v in df[col].tolist()]) for col in df.columns]
    return Table.from_columns(str(path), path.stem if path.stem != "all" else path.parent.name, columns)


def truncate_rows(table: Table, limit: int) -> Table:
    """First ``limit`` rows of the table (used by the Lite evaluation mode)."""
    if table.row_count <= limit:
        return table
    columns = [(col, cells[:limit]) for col, cells in table.columns]
    return Table.from_columns(table.path, table.name, columns)


@dataclass
class NumericStats:
    minimum_value: float
    maximum_value: float
    median_value: float
    average_value: float


@dataclass
class CategoricalStats:
    unique_count: int
    top_items: list[tuple[str, int]]
    categories: list[str] = field(default_factory=list)


@dataclass
class ColumnProfile:
    column_name: str
    dtype: str
    numeric_stats: NumericStats | None = None
    categorical_stats: CategoricalStats | None = None
    null_count: int = 0
    specific_meaning: str = ""


def _is_null(value) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and math.isnan(value):
        return True
    return False


def _as_float(value) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            parsed = float(value.strip())
        except ValueError:
            return None
        return None if math.isnan(parsed) else parsed
    return None


def _bool_token(value) -> str | None:
    if isinstance(value, bool):
        return "true" if value else "false"
    token = str(value).strip().lower()
    return token if token in _BOOL_TOKENS else None


def _parses_as_datetime(value) -> bool:
    if isinstance(value, (datetime, date)):
        return True
    if not isinstance(value, str):
        return False
    text = value.strip()
    if len(text) < 8 or not any(ch.isdigit() for ch in text):
        return False
    for parser in (datetime.fromisoformat, date.fromisoformat):
        try:
            parser(text)
            return True
        except ValueError:
            pass
    for pattern in _DATE_PATTERNS:
        try:
            datetime.strptime(text, pattern)
            return True
        except ValueError:
            pass
    return False


def profile_column(name: str, cells, cfg: SchemaConfig | None = None) -> ColumnProfile:
    """Infer a column's dtype and compute its summary statistics.

    Inference precedence: numeric, boolean, datetime, categorical, text.
    Nulls are excluded from every statistic; a null-only column comes back
    as dtype ``unknown`` with no stats.
    """
    cfg = cfg or SchemaConfig()
    cells = list(cells)
    non_null = [c for c in cells if not _is_null(c)]
    null_count = len(cells) - len(non_null)
    if not non_null:
        return ColumnProfile(column_name=name, dtype="unknown", null_count=null_count)

    # Numeric: every non-null cell is a real number (or a string holding one).
    if all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in non_null):
        values = np.asarray(non_null, dtype=float)
    else:
        parsed = [_as_float(c) for c in non_null]
        values = np.asarray(parsed, dtype=float) if all(p is not None for p in parsed) else None
    if values is not None and values.size:
        stats = NumericStats(
            minimum_value=float(values.min()),
            maximum_value=float(values.max()),
            median_value=float(np.median(values)),
            average_value=float(values.mean()),
        )
        return ColumnProfile(name, "numeric", numeric_stats=stats, null_count=null_count)

    tokens = [_bool_token(c) for c in non_null]
    if all(t is not None for t in tokens) and len(set(tokens)) >= 2:
        dtype = "boolean"
    elif all(_parses_as_datetime(c) for c in non_null):
        dtype = "datetime"
    else:
        dtype = None

    # Frequency table over stringified values, ties broken by first occurrence.
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for i, c in enumerate(non_null):
        key = _cell_text(c)
        if key not in counts:
            first_seen[key] = i
        counts[key] = counts.get(key, 0) + 1
    ordered = sorted(counts, key=lambda k: (-counts[k], first_seen[k]))

    if dtype is None:
        dtype = "categorical" if len(counts) <= max(20, 0.05 * len(non_null)) else "text"

    cat_stats = CategoricalStats(
        unique_count=len(counts),
        top_items=[(k, counts[k]) for k in ordered[: cfg.top_frequent_items]],
        categories=ordered[: cfg.max_listed_categories] if dtype in ("categorical", "boolean") else [],
    )
    return ColumnProfile(name, dtype, categorical_stats=cat_stats, null_count=null_count)


def _cell_text(value) -> str:
    if isinstance(value, (datetime, date)):
        return value.isoformat()
    return str(value)


def _json_safe(value):
    if isinstance(value, (datetime, date)):
        return value.isoformat()
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class TableSchema:
    """Compact JSON-serializable table description handed to models."""

    file_path: str
    table_name: str
    table_description: str
    number_of_rows: int
    column_list: list[str]
    column_description: list[ColumnProfile]
    cell_example: list[dict]


def sample_rows(table: Table, cfg: SchemaConfig | None = None) -> list[dict]:
    """K distinct example rows, seeded and returned in original row order."""
    cfg = cfg or SchemaConfig()
    k = min(cfg.sample_rows_k, table.row_count)
    rng = random.Random(cfg.rng_seed)
    picked = sorted(rng.sample(range(table.row_count), k))
    return [
        {col: _json_safe(cells[i]) for col, cells in table.columns}
        for i in picked
    ]


def build_schema(table: Table, cfg: SchemaConfig | None = None) -> TableSchema:
    """Profile every column and assemble the schema (descriptions left empty)."""
    cfg = cfg or SchemaConfig()
    profiles = [profile_column(col, cells, cfg) for col, cells in table.columns]
    return TableSchema(
        file_path=table.path,
        table_name=table.name,
        table_description="",
        number_of_rows=table.row_count,
        column_list=table.column_names,
        column_description=profiles,
        cell_example=sample_rows(table, cfg) if table.row_count else [],
    )


def _example_payload(profile: ColumnProfile) -> dict:
    example: dict = {}
    if profile.numeric_stats is not None:
        s = profile.numeric_stats
        example = {
            "minimum_value": s.minimum_value,
            "maximum_value": s.maximum_value,
            "median_value": s.median_value,
            "average_value": s.average_value,
        }
    elif profile.categorical_stats is not None:
        s = profile.categorical_stats
        example = {
            "unique_count": s.unique_count,
            "top_items": [[v, c] for v, c in s.top_items],
        }
        if s.categories:
            example["categories"] = list(s.categories)
            if s.unique_count > len(s.categories):
                example["note"] = (
                    f"{s.unique_count} categories in total, "
                    f"only {len(s.categories)} displayed"
                )
    if profile.null_count:
        example["null_count"] = profile.null_count
    return example


def schema_to_dict(schema: TableSchema) -> dict:
    return {
        "file_path": schema.file_path,
        "table_name": schema.table_name,
        "table_description": schema.table_description,
        "number_of_rows": schema.number_of_rows,
        "column_list": list(schema.column_list),
        "column_description": [
            {
                "column_name": p.column_name,
                "dtype": p.dtype,
                "example": _example_payload(p),
                "specific_meaning": p.specific_meaning,
            }
            for p in schema.column_description
        ],
        "cell_example": [dict(row) for row in schema.cell_example],
    }


def schema_to_json(schema: TableSchema, indent: int | None = 2) -> str:
    return json.dumps(schema_to_dict(schema), ensure_ascii=False, indent=indent, default=str)


def _profile_from_dict(entry: dict) -> ColumnProfile:
    example = entry.get("example") or {}
    dtype = entry.get("dtype", "unknown")
    numeric = None
    categorical = None
    if dtype == "numeric" and "minimum_value" in example:
        numeric = NumericStats(
            minimum_value=example["minimum_value"],
            maximum_value=example["maximum_value"],
            median_value=example["median_value"],
            average_value=example["average_value"],
        )
    elif "unique_count" in example:
        categorical = CategoricalStats(
            unique_count=example["unique_count"],
            top_items=[(v, c) for v, c in example.get("top_items", [])],
            categories=list(example.get("categories", [])),
        )
    return ColumnProfile(
        column_name=entry["column_name"],
        dtype=dtype,
        numeric_stats=numeric,
        categorical_stats=categorical,
        null_count=example.get("null_count", 0),
        specific_meaning=entry.get("specific_meaning", ""),
    )


def schema_from_dict(data: dict) -> TableSchema:
    return TableSchema(
        file_path=data["file_path"],
        table_name=data["table_name"],
        table_description=data.get("table_description", ""),
        number_of_rows=data["number_of_rows"],
        column_list=list(data["column_list"]),
        column_description=[_profile_from_dict(e) for e in data["column_description"]],
        cell_example=[dict(r) for r in data.get("cell_example", [])],
    )


def schema_from_json(text: str) -> TableSchema:
    return schema_from_dict(json.loads(text))


def describe_schema(schema: TableSchema, llm: LlmClient, trace: TraceLog | None = None) -> TableSchema:
    """Ask the model to describe the table and each column.

    Columns the response does not cover keep an empty meaning. If the model
    produces no parseable JSON even after one retry, the schema is returned
    undescribed and a warning lands in the trace.
    """
    trace = ensure_trace(trace)
    prompt = prompts.DESCRIBE_TEMPLATE.format(
        table_name=schema.table_name, table_schema=schema_to_json(schema)
    )
    data = None
    for attempt in range(2):
        text = llm.complete(prompt if attempt == 0 else prompt + prompts.JSON_REMINDER)
        trace.record("llm", stage="describe", attempt=attempt, response=text)
        try:
            data = extract_json(text, expect=dict)
            break
        except JsonExtractError:
            continue
    if data is None:
        trace.warn("schema description skipped: model returned no parseable JSON")
        return schema

    description = data.get("Table_Description") or data.get("table_description") or ""
    by_name = {}
    for entry in data.get("Column_Description") or data.get("column_description") or []:
        if isinstance(entry, dict) and entry.get("column_name"):
            by_name[str(entry["column_name"])] = str(entry.get("specific_meaning") or "")
    profiles = []
    for p in schema.column_description:
        meaning = by_name.pop(p.column_name, "")
        profiles.append(dataclasses.replace(p, specific_meaning=meaning) if meaning else p)
    if by_name:
        trace.warn(f"description response named unknown columns: {sorted(by_name)}")
    return dataclasses.replace(
        schema,
        table_description=str(description),
        column_description=profiles,
    )
