"""Evaluator tests: dataset loading, comparison, grouping, benchmark runs."""
from __future__ import annotations

import json
import random

import pytest

from tableqa.answers import TypedAnswer, canonical_text, normalize_answer
from tableqa.errors import GoldCoercionError, ManifestMissingError, TableMissingError
from tableqa.evaluator import (
    CompareConfig,
    ItemResult,
    QAItem,
    compare,
    load_dataset,
    load_item_table,
    run_benchmark,
    size_group,
    summarize_results,
    to_markdown,
)
from tableqa.pipeline import Engine, EngineConfig
from tableqa.schema import Table

from conftest import (
    QA_FIXTURES,
    ZICL_MARK,
    corpus_executor,
    corpus_llm,
    small_table,
    write_csv,
)


class TestLoadDataset:
    def test_counts_items(self, dataset_root):
        items = load_dataset(dataset_root)
        assert len(items) == 10
        assert {i.dataset_id for i in items} == {"books", "cities"}
        kinds = [i.kind for i in items]
        assert kinds.count("boolean") == 2 and kinds.count("list_number") == 2

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ManifestMissingError):
            load_dataset(tmp_path)

    def test_missing_table_names_dataset(self, tmp_path):
        root = tmp_path / "root"
        root.mkdir()
        (root / "qa.jsonl").write_text(
            json.dumps({"dataset": "ghost", "question": "q", "answer": "1", "type": "number"}) + "\n",
            encoding="utf-8",
        )
        with pytest.raises(TableMissingError, match="ghost"):
            load_dataset(root)

    def test_lite_truncates_to_twenty_rows(self, tmp_path):
        root = tmp_path / "root"
        (root / "wide").mkdir(parents=True)
        write_csv(root / "wide" / "all.csv", ["a"], [(i,) for i in range(500)])
        (root / "qa.jsonl").write_text(
            json.dumps({"dataset": "wide", "question": "q", "answer": "1", "type": "number"}) + "\n",
            encoding="utf-8",
        )
        item = load_dataset(root)[0]
        assert load_item_table(item, lite=False).row_count == 500
        assert load_item_table(item, lite=True).row_count == 20


class TestCompare:
    def test_boolean_exact(self):
        pred = normalize_answer("True", "boolean")
        assert compare(pred, "True", "boolean")

    def test_number_within_default_tolerance(self):
        pred = TypedAnswer("number", 3.1400004, "")
        assert compare(pred, "3.14", "number")
        assert not compare(TypedAnswer("number", 3.2, ""), "3.14", "number")

    def test_list_order_insensitive_by_default(self):
        pred = TypedAnswer("list_category", ["b", "a"], "")
        assert compare(pred, "['a','b']", "list_category")
        cfg = CompareConfig(list_order_sensitive=True)
        assert not compare(pred, "['a','b']", "list_category", cfg)

    def test_kind_mismatch_recoerced(self):
        pred = TypedAnswer("number", 1.0, "1")
        assert compare(pred, "True", "boolean")

    def test_uncoercible_prediction_is_incorrect(self):
        pred = TypedAnswer("category", "maybe", "maybe")
        assert not compare(pred, "True", "boolean")

    def test_gold_coercion_error(self):
        pred = TypedAnswer("number", 1.0, "")
        with pytest.raises(GoldCoercionError):
            compare(pred, "not-a-number", "number")

    def test_reflexivity_on_normalizable_golds(self):
        rng = random.Random(5)
        golds = [
            ("True", "boolean"), ("no", "boolean"), ("history", "category"),
            ("3.374", "number"), ("1,200", "number"),
            ("['a', 'b']", "list_category"), ("[1, 2.5]", "list_number"),
        ]
        for _ in range(50):
            gold_raw, kind = rng.choice(golds)
            pred = normalize_answer(gold_raw, kind)
            assert compare(pred, gold_raw, kind)


class TestSizeGroup:
    def test_membership_map_wins(self):
        table = Table.from_columns("x/all.csv", "072_Admissions", [("a", [1] * 9)])
        membership = {"072_Admissions": "small"}
        assert size_group(table, membership) == "small"

    def test_threshold_small(self):
        assert size_group(small_table(**{f"c{i}": list(range(10)) for i in range(10)})) == "small"

    def test_threshold_medium_and_large(self):
        medium = Table.from_columns("t.csv", "t", [(f"c{i}", [0] * 5000) for i in range(4)])
        assert size_group(medium) == "medium"
        large = Table.from_columns("t.csv", "t", [(f"c{i}", [0] * 2000) for i in range(600)])
        assert size_group(large) == "large"  # 1.2M cells


class TestToMarkdown:
    def test_single_cell(self):
        text = to_markdown(small_table(a=[1]), max_rows=10)
        assert text.splitlines() == ["| a |", "| --- |", "| 1 |"]

    def test_pipe_escaped(self):
        text = to_markdown(small_table(c=["x|y"]), max_rows=10)
        assert "x\\|y" in text

    def test_truncation_line_count(self):
        table = small_table(a=list(range(1000)))
        lines = to_markdown(table, max_rows=20).splitlines()
        assert len(lines) == 23  # header + separator + 20 rows + note
        assert "more rows" in lines[-1]

    def test_none_rendered_empty(self):
        text = to_markdown(small_table(a=[None]), max_rows=5)
        assert text.splitlines()[-1] == "|  |"


class TestSummarizeResults:
    def make_results(self):
        # 8 synthetic items: 6 correct, stratified over kinds and sizes.
        spec = [
            ("boolean", "small", True), ("boolean", "small", True),
            ("number", "small", True), ("number", "medium", False),
            ("category", "medium", True), ("category", "large", True),
            ("list_category", "large", False), ("list_number", "large", True),
        ]
        results, groups = [], []
        for i, (kind, group, correct) in enumerate(spec):
            item = QAItem(f"d{i}", "q", "1", kind, "t.csv")
            results.append(ItemResult(item, TypedAnswer(kind, "1", "1"), correct))
            groups.append(group)
        return results, groups

    def test_six_of_eight(self):
        results, groups = self.make_results()
        report = summarize_results(results, groups)
        assert report.overall_accuracy == 0.75
        assert report.by_kind["boolean"] == 1.0
        assert report.by_kind["number"] == 0.5
        assert report.by_size["small"] == 1.0
        assert report.by_size["medium"] == 0.5

    def test_group_accuracies_recombine_to_overall(self):
        results, groups = self.make_results()
        report = summarize_results(results, groups)
        counts_by_kind = {}
        for r in results:
            counts_by_kind[r.item.kind] = counts_by_kind.get(r.item.kind, 0) + 1
        recombined = sum(
            report.by_kind[k] * n for k, n in counts_by_kind.items()
        ) / len(results)
        assert abs(recombined - report.overall_accuracy) < 1e-12


class TestRunBenchmark:
    def make_engine(self):
        return Engine(corpus_llm(), corpus_executor(), EngineConfig())

    def test_golden_corpus_run_all_correct(self, dataset_root):
        items = load_dataset(dataset_root)
        report = run_benchmark(items, "reasoner", self.make_engine())
        errored = [r for r in report.per_item if r.error]
        assert errored == []
        assert report.overall_accuracy == 1.0
        assert set(report.by_kind) == {
            "boolean", "category", "number", "list_category", "list_number",
        }
        assert all(v == 1.0 for v in report.by_kind.values())

    def test_predictions_file_in_item_order(self, dataset_root, tmp_path):
        items = load_dataset(dataset_root)
        out = tmp_path / "predictions.txt"
        run_benchmark(items, "reasoner", self.make_engine(), predictions_path=out)
        lines = out.read_text(encoding="utf-8").splitlines()
        expected = [canonical_text(normalize_answer(fx.gold)) for fx in QA_FIXTURES]
        assert lines == expected

    def test_item_failure_recorded_not_raised(self, dataset_root):
        items = load_dataset(dataset_root)
        items[0].table_path = "/nonexistent/all.csv"
        report = run_benchmark(items, "reasoner", self.make_engine())
        first = report.per_item[0]
        assert first.correct is False
        assert first.error and "FileNotFoundError" in first.error
        assert report.per_item[1].correct  # the rest of the batch is unaffected

    def test_batch_isolation_under_shuffle(self, dataset_root):
        items = load_dataset(dataset_root)
        baseline = {
            r.item.question: canonical_text(r.predicted)
            for r in run_benchmark(items, "reasoner", self.make_engine()).per_item
        }
        rng = random.Random(3)
        shuffled = items[:]
        rng.shuffle(shuffled)
        shuffled_report = run_benchmark(shuffled, "reasoner", self.make_engine())
        for r in shuffled_report.per_item:
            assert canonical_text(r.predicted) == baseline[r.item.question]

    def test_parallel_jobs_match_serial(self, dataset_root):
        items = load_dataset(dataset_root)
        serial = run_benchmark(items, "reasoner", self.make_engine())
        parallel = run_benchmark(items, "reasoner", self.make_engine(), jobs=4)
        assert parallel.overall_accuracy == serial.overall_accuracy == 1.0

    def test_unknown_mode_rejected(self, dataset_root):
        with pytest.raises(ValueError):
            run_benchmark([], "warp-drive", self.make_engine())


class TestZiclMode:
    def zicl_engine(self, max_rows=100):
        from tableqa.llm import MockLlmClient

        llm = MockLlmClient(
            [(ZICL_MARK, json.dumps({"answer": "True", "explanation": ""}))]
        )
        return Engine(llm, corpus_executor(), EngineConfig(zicl_max_rows=max_rows))

    def test_zicl_renders_markdown_and_answers(self, dataset_root):
        items = [i for i in load_dataset(dataset_root) if i.kind == "boolean"][:1]
        report = run_benchmark(items, "zicl", self.zicl_engine())
        assert report.per_item[0].error is None
        assert report.per_item[0].predicted.kind == "boolean"

    def test_zicl_row_budget_truncates_but_completes(self, tmp_path):
        root = tmp_path / "root"
        (root / "tall").mkdir(parents=True)
        write_csv(root / "tall" / "all.csv", ["a"], [(i,) for i in range(1000)])
        (root / "qa.jsonl").write_text(
            json.dumps({"dataset": "tall", "question": "is it tall?", "answer": "True", "type": "boolean"}) + "\n",
            encoding="utf-8",
        )
        engine = self.zicl_engine(max_rows=20)
        report = run_benchmark(load_dataset(root), "zicl", engine)
        assert report.per_item[0].error is None
        prompt = engine.llms.for_stage("zicl").calls[0]
        assert "more rows" in prompt  # truncation note made it into the prompt
        assert report.overall_accuracy == 1.0


class TestCodebasedMode:
    def test_codebased_routes_through_summary(self, dataset_root):
        from tableqa.llm import MockLlmClient
        from tableqa.solver import FakeExecutor
        from conftest import SOLVE_MARK, SUMMARY_MARK

        llm = MockLlmClient(
            [
                (SOLVE_MARK, json.dumps({"code_thought": "t", "code": "# direct\nprint('True')"})),
                (SUMMARY_MARK, "Final Answer: True"),
            ]
        )
        executor = FakeExecutor([("# direct", "True\n")])
        items = [i for i in load_dataset(dataset_root) if i.kind == "boolean"][:1]
        report = run_benchmark(items, "codebased", Engine(llm, executor, EngineConfig()))
        assert report.per_item[0].error is None
        assert report.overall_accuracy == 1.0
