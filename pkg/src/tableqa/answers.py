"""Final-answer summarization, typed normalization, and majority voting.

Five answer kinds are supported: boolean, category, number, list_category,
list_number. Canonical serialization: booleans as the strings "True"/"False",
numbers in plain decimal (never scientific notation), lists bracketed with
", " separators.
"""
from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass
from decimal import Decimal

from . import prompts
from .errors import CoercionError, InvalidStateError
from .llm import LlmClient
from .loop import ReasoningState
from .trace import TraceLog, ensure_trace

KINDS = ("boolean", "category", "number", "list_category", "list_number")

_TRUE_TOKENS = {"true", "yes", "1"}
_FALSE_TOKENS = {"false", "no", "0"}
_FINAL_PREFIX_RE = re.compile(
    r"^\s*\**\s*(final\s+answer|answer|response)\s*\**\s*[::\-]?\s*", re.IGNORECASE
)
_THOUSANDS_RE = re.compile(r"^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$")


@dataclass(frozen=True)
class TypedAnswer:
    kind: str
    value: object
    raw: str


@dataclass
class VoteConfig:
    k: int = 5
    temperature: float = 0.7

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


def summarize(
    query: str, state: ReasoningState, llm: LlmClient, trace: TraceLog | None = None
) -> str:
    """Produce the final-answer line from the recorded reasoning.

    Takes the last nonempty line of the model reply and strips leading
    "Final Answer:"-style prefixes.
    """
    if not state.history:
        raise InvalidStateError("summary needs at least one recorded cycle")
    trace = ensure_trace(trace)
    records = prompts.render_history(state.history)
    if state.final_thought:
        records += f"\n--- Closing thought ---\n{state.final_thought}"
    prompt = prompts.SUMMARY_TEMPLATE.format(query=query, thought_process=records)
    text = llm.complete(prompt)
    trace.record("llm", stage="summarize", response=text)
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    answer = lines[-1] if lines else ""
    return _FINAL_PREFIX_RE.sub("", answer).strip()


def plain_decimal(value: float) -> str:
    """Format a float in plain decimal, never scientific notation."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    text = format(Decimal(repr(value)), "f")
    return text


def _strip_quotes(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    return text


def _parse_bool(text: str) -> str | None:
    token = _strip_quotes(text).strip().rstrip(".").lower()
    if token in _TRUE_TOKENS:
        return "True"
    if token in _FALSE_TOKENS:
        return "False"
    return None


def _parse_number(text: str) -> float | None:
    token = _strip_quotes(text).strip().rstrip("%")
    if _THOUSANDS_RE.match(token):
        token = token.replace(",", "")
    try:
        value = float(token)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _parse_list_items(text: str) -> list | None:
    """Items of a bracketed list literal, or None if it will not parse."""
    stripped = text.strip()
    if not (stripped.startswith("[") and stripped.endswith("]")):
        return None
    try:
        value = ast.literal_eval(stripped)
        if isinstance(value, (list, tuple)):
            return list(value)
    except (ValueError, SyntaxError):
        pass
    # Fallback: split on top-level commas, tolerating unquoted words.
    inner = stripped[1:-1].strip()
    if not inner:
        return []
    items: list[str] = []
    depth = 0
    quote: str | None = None
    current = []
    for ch in inner:
        if quote:
            if ch == quote:
                quote = None
            current.append(ch)
        elif ch in "'\"":
            quote = ch
            current.append(ch)
        elif ch in "([":
            depth += 1
            current.append(ch)
        elif ch in ")]":
            depth -= 1
            current.append(ch)
        elif ch == "," and depth == 0:
            items.append("".join(current))
            current = []
        else:
            current.append(ch)
    items.append("".join(current))
    return [_strip_quotes(item.strip()) for item in items if item.strip()]


def _item_text(item) -> str:
    if isinstance(item, float):
        return plain_decimal(item)
    return str(item)


def normalize_answer(raw: str, expected_kind: str | None = None) -> TypedAnswer:
    """Coerce a raw answer string into a TypedAnswer.

    With ``expected_kind`` the value is forced toward that kind
    (CoercionError when impossible). Without it the kind is inferred:
    bracketed text is a list (numeric when every element parses), then a
    parseable real is a number, then true/false tokens are boolean, and
    anything else is a category.
    """
    if expected_kind is not None and expected_kind not in KINDS:
        raise ValueError(f"unknown answer kind: {expected_kind}")
    if not raw or not raw.strip():
        raise CoercionError("empty answer text")
    stripped = raw.strip()

    if expected_kind == "boolean":
        value = _parse_bool(stripped)
        if value is None:
            raise CoercionError(f"not a boolean token: {stripped!r}")
        return TypedAnswer("boolean", value, raw)

    if expected_kind == "number":
        value = _parse_number(stripped)
        if value is None:
            raise CoercionError(f"not a number: {stripped!r}")
        return TypedAnswer("number", value, raw)

    if expected_kind == "category":
        return TypedAnswer("category", _strip_quotes(stripped), raw)

    if expected_kind in ("list_category", "list_number"):
        items = _parse_list_items(stripped)
        if items is None:
            # Bare comma-separated fallback; a single value becomes a singleton.
            items = [_strip_quotes(part.strip()) for part in stripped.split(",") if part.strip()]
        if expected_kind == "list_number":
            numbers = [_parse_number(_item_text(i)) for i in items]
            if not numbers or any(n is None for n in numbers):
                raise CoercionError(f"not a list of numbers: {stripped!r}")
            return TypedAnswer("list_number", numbers, raw)
        return TypedAnswer("list_category", [_item_text(i) for i in items], raw)

    # Inference path.
    items = _parse_list_items(stripped)
    if items is not None:
        numbers = [_parse_number(_item_text(i)) for i in items]
        if numbers and all(n is not None for n in numbers):
            return TypedAnswer("list_number", numbers, raw)
        return TypedAnswer("list_category", [_item_text(i) for i in items], raw)
    number = _parse_number(stripped)
    if number is not None:
        return TypedAnswer("number", number, raw)
    token = _parse_bool(stripped)
    if token is not None:
        return TypedAnswer("boolean", token, raw)
    return TypedAnswer("category", _strip_quotes(stripped), raw)


def canonical_text(answer: TypedAnswer) -> str:
    """Serialize a TypedAnswer to its canonical string form."""
    if answer.kind == "number":
        return plain_decimal(float(answer.value))
    if answer.kind == "list_number":
        return "[" + ", ".join(plain_decimal(float(v)) for v in answer.value) + "]"
    if answer.kind == "list_category":
        return "[" + ", ".join(repr(str(v)) for v in answer.value) + "]"
    return str(answer.value)


def _fold_text(text: str) -> str:
    return " ".join(str(text).split()).casefold()


def numbers_equal(pred: float, gold: float, rel_tol: float = 1e-3, abs_tol: float = 1e-6) -> bool:
    return abs(pred - gold) <= max(abs_tol, rel_tol * abs(gold))


def values_equal(
    pred: TypedAnswer,
    gold: TypedAnswer,
    rel_tol: float = 1e-3,
    abs_tol: float = 1e-6,
    order_sensitive: bool = False,
) -> bool:
    """Equality rule shared by the evaluator and vote bucketing."""
    if pred.kind != gold.kind:
        return False
    if pred.kind == "number":
        return numbers_equal(float(pred.value), float(gold.value), rel_tol, abs_tol)
    if pred.kind in ("boolean", "category"):
        return _fold_text(str(pred.value)) == _fold_text(str(gold.value))
    if pred.kind == "list_number":
        a = [float(v) for v in pred.value]
        b = [float(v) for v in gold.value]
        if len(a) != len(b):
            return False
        if not order_sensitive:
            a, b = sorted(a), sorted(b)
        return all(numbers_equal(x, y, rel_tol, abs_tol) for x, y in zip(a, b))
    if pred.kind == "list_category":
        a = [_fold_text(v) for v in pred.value]
        b = [_fold_text(v) for v in gold.value]
        if not order_sensitive:
            a, b = sorted(a), sorted(b)
        return a == b
    return False


def majority_vote(answers: list[TypedAnswer], cfg: VoteConfig | None = None) -> TypedAnswer:
    """Most frequent normalized answer; ties go to the earliest run.

    Mixed kinds are first voted by kind; values are then bucketed with the
    evaluator's equality rule (so nearly-equal numbers share a bucket).
    """
    if not answers:
        raise ValueError("majority_vote needs at least one answer")
    kind_counts: dict[str, int] = {}
    kind_first: dict[str, int] = {}
    for i, ans in enumerate(answers):
        kind_counts[ans.kind] = kind_counts.get(ans.kind, 0) + 1
        kind_first.setdefault(ans.kind, i)
    winning_kind = min(kind_counts, key=lambda k: (-kind_counts[k], kind_first[k]))

    buckets: list[tuple[TypedAnswer, int, int]] = []  # (representative, count, first index)
    for i, ans in enumerate(answers):
        if ans.kind != winning_kind:
            continue
        for j, (rep, count, first) in enumerate(buckets):
            if values_equal(ans, rep):
                buckets[j] = (rep, count + 1, first)
                break
        else:
            buckets.append((ans, 1, i))
    winner = min(buckets, key=lambda b: (-b[1], b[2]))
    return winner[0]
