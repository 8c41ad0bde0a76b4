"""Command-line interface: profile tables, answer questions, run benchmarks."""
from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from . import __version__
from .answers import canonical_text
from .config import build_executor, build_router, load_config
from .errors import TableQAError
from .evaluator import MODES, format_report, load_dataset, run_benchmark
from .pipeline import Engine
from .schema import build_schema, describe_schema, load_table, schema_to_json
from .trace import TraceLog


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.version_option(__version__)
def main():
    """Question answering over tabular files."""


@main.command("schema")
@click.argument("table_path", type=click.Path())
@click.option("--k", type=int, default=None, help="Number of sampled example rows.")
@click.option("--seed", type=int, default=None, help="RNG seed for row sampling.")
@click.option("--describe", is_flag=True, help="Enrich the schema with model descriptions.")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_schema(table_path, k, seed, describe, config_path):
    """Profile a table and print its schema JSON."""
    try:
        cfg = load_config(config_path)
        overrides = {}
        if k is not None:
            overrides["sample_rows_k"] = k
        if seed is not None:
            overrides["rng_seed"] = seed
        schema_cfg = dataclasses.replace(cfg.schema, **overrides) if overrides else cfg.schema
        table = load_table(table_path)
        schema = build_schema(table, schema_cfg)
        if describe:
            router = build_router(cfg, Path(config_path).parent if config_path else ".")
            schema = describe_schema(schema, router.for_stage("describe"), TraceLog(cfg.trace_path))
        click.echo(schema_to_json(schema))
    except (TableQAError, FileNotFoundError, ValueError) as exc:
        _fail(str(exc))


def _build_engine(cfg, config_path, trace_path=None) -> Engine:
    base_dir = Path(config_path).parent if config_path else "."
    router = build_router(cfg, base_dir)
    executor = build_executor(cfg)
    trace = TraceLog(trace_path or cfg.trace_path)
    return Engine(router, executor, cfg.engine_config(), trace)


@main.command("ask")
@click.argument("table_path", type=click.Path())
@click.argument("question")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--vote", type=int, default=0, help="Majority-vote over this many runs.")
@click.option("--max-rounds", type=int, default=None, help="Reasoning cycle cap.")
@click.option("--seed", type=int, default=None, help="RNG seed for row sampling.")
@click.option("--trace", "trace_path", type=click.Path(), default=None, help="JSONL trace file.")
def cmd_ask(table_path, question, config_path, vote, max_rounds, seed, trace_path):
    """Answer one question about a table; prints the canonical answer."""
    try:
        cfg = load_config(config_path)
        if max_rounds is not None:
            cfg.loop = dataclasses.replace(cfg.loop, max_rounds=max_rounds)
        if seed is not None:
            cfg.schema = dataclasses.replace(cfg.schema, rng_seed=seed)
        if vote:
            cfg.vote = dataclasses.replace(cfg.vote, k=vote)
        engine = _build_engine(cfg, config_path, trace_path)
        table = load_table(table_path)
        if vote:
            answer = engine.answer_voted(table, question)
        else:
            answer, _ = engine.answer(table, question)
        click.echo(canonical_text(answer))
    except (TableQAError, FileNotFoundError, ValueError) as exc:
        _fail(str(exc))


@main.command("bench")
@click.argument("root", type=click.Path())
@click.option("--mode", type=click.Choice(MODES), default="reasoner")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--lite", is_flag=True, help="Truncate every table to its first 20 rows.")
@click.option("--jobs", type=int, default=1, help="Concurrent items.")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Report JSON file.")
@click.option(
    "--predictions", "predictions_path", type=click.Path(), default=None,
    help="Flat predictions file, one canonical answer per line.",
)
@click.option("--trace", "trace_path", type=click.Path(), default=None, help="JSONL trace file.")
@click.option(
    "--membership", "membership_path", type=click.Path(), default=None,
    help="JSON map of dataset name to size group.",
)
def cmd_bench(root, mode, config_path, lite, jobs, out_path, predictions_path, trace_path, membership_path):
    """Run a benchmark over a dataset root and report accuracy."""
    try:
        cfg = load_config(config_path)
        engine = _build_engine(cfg, config_path, trace_path)
        items = load_dataset(root)
        membership = None
        if membership_path:
            membership = json.loads(Path(membership_path).read_text(encoding="utf-8"))
        report = run_benchmark(
            items,
            mode,
            engine,
            compare_cfg=cfg.compare,
            lite=lite,
            jobs=jobs,
            membership=membership,
            predictions_path=predictions_path,
        )
        if out_path:
            Path(out_path).write_text(
                json.dumps(report.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8"
            )
        click.echo(format_report(report), err=True)
        click.echo(json.dumps(report.to_dict(), ensure_ascii=False))
    except (TableQAError, FileNotFoundError, ValueError) as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()
