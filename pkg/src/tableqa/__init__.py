"""Question answering over tabular files.

A table is profiled into a compact schema, the query is linked to the
columns and cell entities it touches, and a bounded reasoning loop
generates and executes analysis code until a typed answer can be emitted.
"""

__version__ = "0.1.0"

from .answers import TypedAnswer, VoteConfig, majority_vote, normalize_answer
from .errors import TableQAError
from .evaluator import CompareConfig, EvalReport, QAItem, compare, load_dataset, run_benchmark
from .linking import EntityLink, FocusedSchema, LinkingConfig, SubQuery
from .llm import HttpLlmClient, LlmClient, MockLlmClient, ScriptEntry, StageRouter, extract_json
from .loop import CycleRecord, LoopConfig, ReasoningState
from .pipeline import Engine, EngineConfig
from .schema import (
    ColumnProfile,
    SchemaConfig,
    Table,
    TableSchema,
    build_schema,
    describe_schema,
    load_table,
    profile_column,
    sample_rows,
)
from .solver import FakeExecutor, Observation, PotSolution, SandboxConfig, SubprocessExecutor

__all__ = [
    "ColumnProfile",
    "CompareConfig",
    "CycleRecord",
    "Engine",
    "EngineConfig",
    "EntityLink",
    "EvalReport",
    "FakeExecutor",
    "FocusedSchema",
    "HttpLlmClient",
    "LinkingConfig",
    "LlmClient",
    "LoopConfig",
    "MockLlmClient",
    "Observation",
    "PotSolution",
    "QAItem",
    "ReasoningState",
    "SandboxConfig",
    "SchemaConfig",
    "ScriptEntry",
    "StageRouter",
    "SubQuery",
    "SubprocessExecutor",
    "Table",
    "TableQAError",
    "TableSchema",
    "TypedAnswer",
    "VoteConfig",
    "build_schema",
    "compare",
    "describe_schema",
    "extract_json",
    "load_dataset",
    "load_table",
    "majority_vote",
    "normalize_answer",
    "profile_column",
    "run_benchmark",
    "sample_rows",
]
