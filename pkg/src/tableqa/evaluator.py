"""Benchmark harness: load QA datasets, run a strategy, score by type and size.

Dataset layout: ``<root>/<dataset_id>/all.csv`` (or ``.parquet``) plus
``<root>/qa.jsonl`` with fields {dataset, question, answer, type}. Reports
carry overall accuracy, per-kind and per-size breakdowns, and per-item
predictions; predictions are also exported one canonical answer per line.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .answers import TypedAnswer, canonical_text, normalize_answer, values_equal
from .errors import (
    CoercionError,
    GoldCoercionError,
    ManifestMissingError,
    TableMissingError,
)
from .pipeline import Engine
from .schema import Table, load_table, truncate_rows

KIND_ALIASES = {
    "boolean": "boolean",
    "category": "category",
    "number": "number",
    "list[category]": "list_category",
    "list[number]": "list_number",
    "list_category": "list_category",
    "list_number": "list_number",
}

SIZE_GROUPS = ("small", "medium", "large")
LITE_ROW_LIMIT = 20

MODES = ("reasoner", "zicl", "codebased")


@dataclass
class QAItem:
    dataset_id: str
    question: str
    gold_raw: str
    kind: str
    table_path: str


@dataclass
class CompareConfig:
    numeric_rel_tol: float = 1e-3
    numeric_abs_tol: float = 1e-6
    list_order_sensitive: bool = False

    def __post_init__(self):
        if self.numeric_rel_tol < 0 or self.numeric_abs_tol < 0:
            raise ValueError("tolerances must be >= 0")


@dataclass
class ItemResult:
    item: QAItem
    predicted: TypedAnswer | None
    correct: bool
    error: str | None = None


@dataclass
class EvalReport:
    overall_accuracy: float
    by_kind: dict[str, float]
    by_size: dict[str, float]
    per_item: list[ItemResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "overall_accuracy": self.overall_accuracy,
            "by_kind": dict(self.by_kind),
            "by_size": dict(self.by_size),
            "per_item": [
                {
                    "dataset": r.item.dataset_id,
                    "question": r.item.question,
                    "kind": r.item.kind,
                    "gold": r.item.gold_raw,
                    "predicted": canonical_text(r.predicted) if r.predicted else None,
                    "correct": r.correct,
                    "error": r.error,
                }
                for r in self.per_item
            ],
        }


def _find_table(root: Path, dataset_id: str) -> Path:
    base = root / dataset_id
    for name in ("all.csv", "all.parquet"):
        candidate = base / name
        if candidate.exists():
            return candidate
    for candidate in sorted(base.glob("*.csv")) + sorted(base.glob("*.parquet")):
        return candidate
    raise TableMissingError(f"dataset {dataset_id!r} has no table file under {base}")


def load_dataset(root: str | Path) -> list[QAItem]:
    """Read the QA manifest and resolve each item's table path."""
    root = Path(root)
    manifest = root / "qa.jsonl"
    if not manifest.exists():
        raise ManifestMissingError(f"no qa.jsonl under {root}")
    items = []
    for line in manifest.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        entry = json.loads(line)
        kind = KIND_ALIASES.get(str(entry.get("type", "")).strip().lower())
        if kind is None:
            raise ValueError(f"unknown answer type in manifest: {entry.get('type')!r}")
        dataset_id = str(entry["dataset"])
        items.append(
            QAItem(
                dataset_id=dataset_id,
                question=str(entry["question"]),
                gold_raw=str(entry["answer"]),
                kind=kind,
                table_path=str(_find_table(root, dataset_id)),
            )
        )
    return items


def load_item_table(item: QAItem, lite: bool = False) -> Table:
    """Load an item's table, truncated to the first 20 rows in Lite mode."""
    table = load_table(item.table_path)
    return truncate_rows(table, LITE_ROW_LIMIT) if lite else table


def compare(
    pred: TypedAnswer, gold_raw: str, kind: str, cfg: CompareConfig | None = None
) -> bool:
    """Score one prediction against the gold string for the given kind.

    Gold strings that cannot be coerced raise GoldCoercionError; predictions
    that cannot be coerced simply score as incorrect.
    """
    cfg = cfg or CompareConfig()
    try:
        gold = normalize_answer(gold_raw, expected_kind=kind)
    except CoercionError as exc:
        raise GoldCoercionError(f"gold {gold_raw!r} is not a valid {kind}: {exc}") from exc
    candidate = pred
    if candidate.kind != kind:
        try:
            candidate = normalize_answer(canonical_text(pred), expected_kind=kind)
        except CoercionError:
            return False
    return values_equal(
        candidate,
        gold,
        rel_tol=cfg.numeric_rel_tol,
        abs_tol=cfg.numeric_abs_tol,
        order_sensitive=cfg.list_order_sensitive,
    )


def size_group(table: Table, membership: dict[str, str] | None = None) -> str:
    """Bucket a table as small/medium/large by cell count.

    An explicit membership map (dataset name -> group) wins when provided;
    otherwise cells < 5,000 are small and cells < 100,000 are medium.
    """
    if membership:
        group = membership.get(table.name)
        if group in SIZE_GROUPS:
            return group
    cells = table.row_count * table.col_count
    if cells < 5_000:
        return "small"
    if cells < 100_000:
        return "medium"
    return "large"


def _escape_md(value) -> str:
    text = "" if value is None else str(value)
    return text.replace("|", "\\|").replace("\n", " ")


def to_markdown(table: Table, max_rows: int) -> str:
    """Render the table as a Markdown grid, truncated to ``max_rows`` rows."""
    header = "| " + " | ".join(_escape_md(c) for c in table.column_names) + " |"
    separator = "| " + " | ".join("---" for _ in table.column_names) + " |"
    shown = min(table.row_count, max_rows)
    lines = [header, separator]
    for i in range(shown):
        lines.append("| " + " | ".join(_escape_md(cells[i]) for _, cells in table.columns) + " |")
    if shown < table.row_count:
        lines.append(f"... ({table.row_count - shown} more rows)")
    return "\n".join(lines)


def _predict(engine: Engine, item: QAItem, mode: str, lite: bool) -> tuple[TypedAnswer, Table]:
    table = load_item_table(item, lite=lite)
    if mode == "reasoner":
        answer, _ = engine.answer(table, item.question, expected_kind=item.kind)
    elif mode == "zicl":
        answer = engine.answer_zicl(table, item.question, expected_kind=item.kind)
    elif mode == "codebased":
        answer = engine.answer_codebased(table, item.question, expected_kind=item.kind)
    else:
        raise ValueError(f"unknown mode: {mode!r}")
    return answer, table


def run_benchmark(
    items: list[QAItem],
    mode: str,
    engine: Engine,
    compare_cfg: CompareConfig | None = None,
    lite: bool = False,
    jobs: int = 1,
    membership: dict[str, str] | None = None,
    predictions_path: str | Path | None = None,
) -> EvalReport:
    """Evaluate every item with the chosen strategy and aggregate accuracy.

    A failing item is recorded as incorrect with its reason; it never aborts
    the batch.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode: {mode!r} (expected one of {MODES})")
    compare_cfg = compare_cfg or CompareConfig()

    def evaluate(item: QAItem) -> tuple[ItemResult, str]:
        try:
            predicted, table = _predict(engine, item, mode, lite)
            group = size_group(table, membership)
            correct = compare(predicted, item.gold_raw, item.kind, compare_cfg)
            return ItemResult(item, predicted, correct), group
        except Exception as exc:
            return ItemResult(item, None, False, error=f"{type(exc).__name__}: {exc}"), "small"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(evaluate, items))
    else:
        outcomes = [evaluate(item) for item in items]

    results = [outcome[0] for outcome in outcomes]
    groups = [outcome[1] for outcome in outcomes]
    report = summarize_results(results, groups)
    if predictions_path is not None:
        lines = [
            canonical_text(r.predicted) if r.predicted is not None else ""
            for r in results
        ]
        Path(predictions_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return report


def summarize_results(results: list[ItemResult], groups: list[str]) -> EvalReport:
    """Reduce per-item outcomes into the accuracy report."""
    total = len(results)
    correct_total = sum(1 for r in results if r.correct)
    by_kind: dict[str, list[int]] = {}
    by_size: dict[str, list[int]] = {}
    for result, group in zip(results, groups):
        by_kind.setdefault(result.item.kind, []).append(int(result.correct))
        by_size.setdefault(group, []).append(int(result.correct))
    return EvalReport(
        overall_accuracy=correct_total / total if total else 0.0,
        by_kind={k: sum(v) / len(v) for k, v in by_kind.items()},
        by_size={g: sum(v) / len(v) for g, v in by_size.items()},
        per_item=results,
    )


def format_report(report: EvalReport) -> str:
    """Human-readable accuracy table for stdout."""
    lines = [f"overall accuracy: {report.overall_accuracy:.4f}"]
    if report.by_kind:
        lines.append("by kind:")
        for kind in sorted(report.by_kind):
            lines.append(f"  {kind:<14} {report.by_kind[kind]:.4f}")
    if report.by_size:
        lines.append("by size:")
        for group in SIZE_GROUPS:
            if group in report.by_size:
                lines.append(f"  {group:<14} {report.by_size[group]:.4f}")
    errors = [r for r in report.per_item if r.error]
    if errors:
        lines.append(f"items with errors: {len(errors)}")
    return "\n".join(lines)
