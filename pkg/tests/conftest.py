"""Shared fixtures: tiny tables, a QA fixture corpus, and mock transcripts.

The corpus is two small CSV tables with ten questions (two per answer
kind). ``fixture_script`` builds the full scripted LLM transcript and fake
executor results that drive the end-to-end pipeline hermetically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import pytest

from tableqa.llm import MockLlmClient, ScriptEntry
from tableqa.schema import Table
from tableqa.solver import FakeExecutor, FakeResult

BOOKS_ROWS = [
    ("Yuval Noah Harari", "Sapiens", "history", 3374, True),
    ("Stephen King", "It", "horror", 5000, True),
    ("Mary Beard", "SPQR", "history", 1200, False),
    ("Agatha Christie", "Poirot", "mystery", 900, True),
    ("Isaac Asimov", "Foundation", "scifi", 2200, False),
    ("Jane Austen", "Emma", "romance", 1500, True),
]
BOOKS_HEADER = ["author", "title", "genre", "copies_sold", "in_print"]

CITIES_ROWS = [
    ("Lisbon", "Portugal", 545000, True),
    ("Madrid", "Spain", 3223000, False),
    ("Porto", "Portugal", 231000, True),
    ("Barcelona", "Spain", 1620000, True),
    ("Paris", "France", 2161000, False),
    ("Lyon", "France", 513000, False),
    ("Faro", "Portugal", 60000, True),
]
CITIES_HEADER = ["city", "country", "population", "coastal"]


def write_csv(path: Path, header, rows) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def books_csv(tmp_path) -> Path:
    return write_csv(tmp_path / "books.csv", BOOKS_HEADER, BOOKS_ROWS)


@pytest.fixture
def cities_csv(tmp_path) -> Path:
    return write_csv(tmp_path / "cities.csv", CITIES_HEADER, CITIES_ROWS)


def small_table(name="t", **columns) -> Table:
    cols = [(col, list(cells)) for col, cells in columns.items()]
    return Table.from_columns(f"{name}.csv", name, cols)


# --- QA fixture corpus -------------------------------------------------------


@dataclass
class QAFixture:
    qid: str
    table: str  # "books" or "cities"
    question: str
    kind: str
    gold: str
    columns: list[str]
    stdout: str
    entity: tuple[str, str, str] | None = None  # (surface, column, aligned value)


QA_FIXTURES = [
    QAFixture(
        "q01", "books", "Is the author Mr Harari present in the table?", "boolean", "True",
        ["author"], "True", entity=("Mr Harari", "author", "Yuval Noah Harari"),
    ),
    QAFixture(
        "q02", "books", "How many copies of Sapiens were sold?", "number", "3374",
        ["title", "copies_sold"], "3374",
    ),
    QAFixture(
        "q03", "books", "Which genre appears most often?", "category", "history",
        ["genre"], "history",
    ),
    QAFixture(
        "q04", "books", "List the titles of the history books.", "list[category]",
        "['Sapiens', 'SPQR']", ["title", "genre"], "['Sapiens', 'SPQR']",
    ),
    QAFixture(
        "q05", "books", "How many copies did each history book sell?", "list[number]",
        "[3374, 1200]", ["genre", "copies_sold"], "[3374, 1200]",
    ),
    QAFixture(
        "q06", "cities", "Is Madrid a coastal city?", "boolean", "False",
        ["city", "coastal"], "False",
    ),
    QAFixture(
        "q07", "cities", "What is the population of Porto?", "number", "231000",
        ["city", "population"], "231000",
    ),
    QAFixture(
        "q08", "cities", "Which country has the most cities listed?", "category", "Portugal",
        ["country"], "Portugal",
    ),
    QAFixture(
        "q09", "cities", "List the cities located in Portugal.", "list[category]",
        "['Lisbon', 'Porto', 'Faro']", ["city", "country"], "['Lisbon', 'Porto', 'Faro']",
    ),
    QAFixture(
        "q10", "cities", "What are the populations of the Spanish cities?", "list[number]",
        "[3223000, 1620000]", ["city", "country", "population"], "[3223000, 1620000]",
    ),
]

# Stage discriminators: unique phrases of each prompt template.
DESCRIBE_MARK = "add detailed explanations"
DECOMPOSE_MARK = "break down the original query"
ENTITY_MARK = "concrete entities"
ALIGN_MARK = "copied verbatim from the candidate list"
SOLVE_MARK = '"code_thought" and "code"'
JUDGE_MARK = "**Thinking Process Records**"
SUMMARY_MARK = "generate the Final Answer"
ZICL_MARK = "single JSON with your answer"


def describe_response(table: str) -> str:
    columns = BOOKS_HEADER if table == "books" else CITIES_HEADER
    descriptions = [
        {"column_name": c, "specific_meaning": f"The {c.replace('_', ' ')} field."}
        for c in columns
    ]
    return json.dumps(
        {"Table_Description": f"Rows about {table}.", "Column_Description": descriptions}
    )


def fixture_entries(fx: QAFixture) -> list[ScriptEntry]:
    """Scripted LLM exchanges for one question (describe entries live elsewhere)."""
    decomposition = json.dumps(
        [{"Query1": f"Work out: {fx.question}", "relevant_column_list": fx.columns}]
    )
    if fx.entity:
        surface, column, value = fx.entity
        entity_resp = json.dumps({"entities": [{"entity": surface, "columns": [column]}]})
    else:
        entity_resp = json.dumps({"entities": []})
    entries = [
        ScriptEntry((DECOMPOSE_MARK, fx.question), decomposition),
        ScriptEntry((ENTITY_MARK, fx.question), entity_resp),
        ScriptEntry(
            (SOLVE_MARK, fx.question),
            json.dumps(
                {
                    "code_thought": f"Compute the answer for {fx.qid}.",
                    "code": f"# {fx.qid}\nprint({fx.stdout!r})",
                }
            ),
        ),
        ScriptEntry(
            (JUDGE_MARK, fx.question),
            f"**Thought**: 'I have completed the task'\n**Response**: {fx.stdout}",
        ),
        ScriptEntry((SUMMARY_MARK, fx.question), f"Final Answer: {fx.stdout}"),
    ]
    if fx.entity:
        surface, column, value = fx.entity
        entries.append(
            ScriptEntry(
                (ALIGN_MARK, surface), json.dumps({"column": column, "value": value})
            )
        )
    return entries


def corpus_script() -> list[ScriptEntry]:
    """The full transcript covering every fixture question plus describe calls."""
    entries = [
        ScriptEntry((DESCRIBE_MARK, 'regarding "books"'), describe_response("books")),
        ScriptEntry((DESCRIBE_MARK, 'regarding "cities"'), describe_response("cities")),
    ]
    for fx in QA_FIXTURES:
        entries.extend(fixture_entries(fx))
    return entries


def corpus_executor() -> FakeExecutor:
    return FakeExecutor(
        [FakeResult(f"# {fx.qid}\n", stdout=fx.stdout + "\n") for fx in QA_FIXTURES]
    )


def corpus_llm(strict: bool = True) -> MockLlmClient:
    return MockLlmClient(corpus_script(), strict=strict)


def write_mock_config(directory: Path) -> Path:
    """Write a hermetic run config: mock chat backend + scripted fake executor."""
    directory.mkdir(parents=True, exist_ok=True)
    script = []
    for entry in corpus_script():
        matcher = entry.matcher
        script.append(
            {
                "match": list(matcher) if isinstance(matcher, tuple) else matcher,
                "response": entry.response,
                "once": entry.once,
            }
        )
    script_path = directory / "transcript.json"
    script_path.write_text(json.dumps(script, indent=1), encoding="utf-8")
    config = {
        "endpoints": {"main": {"kind": "mock", "script": "transcript.json"}},
        "stages": {"default": "main"},
        "executor": "fake",
        "executor_scripts": [
            {"match": f"# {fx.qid}\n", "stdout": fx.stdout + "\n"} for fx in QA_FIXTURES
        ],
    }
    config_path = directory / "run.yaml"
    config_path.write_text(json.dumps(config), encoding="utf-8")  # JSON is valid YAML
    return config_path


@pytest.fixture
def dataset_root(tmp_path) -> Path:
    """DataBench-style root: <root>/<dataset>/all.csv plus qa.jsonl."""
    root = tmp_path / "corpus"
    (root / "books").mkdir(parents=True)
    (root / "cities").mkdir(parents=True)
    write_csv(root / "books" / "all.csv", BOOKS_HEADER, BOOKS_ROWS)
    write_csv(root / "cities" / "all.csv", CITIES_HEADER, CITIES_ROWS)
    manifest = [
        json.dumps(
            {
                "dataset": fx.table,
                "question": fx.question,
                "answer": fx.gold,
                "type": fx.kind,
            }
        )
        for fx in QA_FIXTURES
    ]
    (root / "qa.jsonl").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    return root
