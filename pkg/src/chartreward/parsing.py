"""Deterministic decomposition of raw completions into structured rationales.

A conformant completion looks like::

    <think><type>bar</type><table>{"columns": [...], "rows": [...]}</table>
    <step-1>: ... <step-2>: ... </think><answer>42</answer>

Parsing is total: structural violations land in ``parse_diagnostics`` and
``schema_ok`` instead of raising.  Tag matching is case-sensitive and exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .tables import CanonicalTable, ParseFailure, parse_table_json

# Violation codes emitted by parse_rollout.
MISSING_THINK_BLOCK = "MISSING_THINK_BLOCK"
MISSING_ANSWER_BLOCK = "MISSING_ANSWER_BLOCK"
BLOCK_ORDER = "BLOCK_ORDER"
MISSING_TYPE_TAG = "MISSING_TYPE_TAG"
MISSING_TABLE_TAG = "MISSING_TABLE_TAG"
STEP_ORDER = "STEP_ORDER"
UNKNOWN_CHART_TYPE = "UNKNOWN_CHART_TYPE"
# Table failures are prefixed so diagnostics stay a flat string list, e.g.
# TABLE_SYNTAX, TABLE_MISSING_KEY, TABLE_EXTRA_KEY, TABLE_RAGGED.
TABLE_VIOLATION_PREFIX = "TABLE_"

CHART_TYPES = frozenset(
    {
        "line",
        "bar",
        "stacked bar",
        "pie",
        "histogram",
        "scatterplot",
        "area",
        "stacked area",
        "bubble",
        "treemap",
    }
)

# Synonym labels folded into the ten canonical families.
_CHART_SYNONYMS = {
    "column": "bar",
    "grouped bar": "bar",
    "grouped bars": "bar",
    "donut": "pie",
    "point": "scatterplot",
    "scatter": "scatterplot",
    "scatter plot": "scatterplot",
}

_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)
_TYPE_RE = re.compile(r"<type>(.*?)</type>", re.DOTALL)
_TABLE_RE = re.compile(r"<table>(.*?)</table>", re.DOTALL)
_STEP_MARKER_RE = re.compile(r"<step-(\d+)>:")
_TRAILING_SPECIAL_RE = re.compile(r"[^a-z0-9)]+$")
_WS_RUN_RE = re.compile(r"\s+")


def normalize_text(s: str) -> str:
    """Lowercase, trim, strip the trailing non-[a-z0-9)] run, collapse spaces.

    Idempotent by construction.
    """
    s = s.lower().strip()
    s = _TRAILING_SPECIAL_RE.sub("", s)
    return _WS_RUN_RE.sub(" ", s)


def normalize_chart_type(s: str) -> str | None:
    """Map a predicted chart-type string onto the canonical ten-family set.

    Returns None for anything that does not normalize to a canonical label
    (the caller treats that as an unknown type, reward 0).
    """
    label = normalize_text(s)
    if label in CHART_TYPES:
        return label
    if label in _CHART_SYNONYMS:
        return _CHART_SYNONYMS[label]
    if label.startswith("cumulative"):
        return "stacked bar"
    return None


def split_steps(think_text: str) -> list[str]:
    """Split reasoning on ``<step-k>:`` markers, keeping textual order.

    Text before the first marker is discarded; steps empty after trimming are
    dropped.  Returns [] when there are no markers.
    """
    return _split_steps_impl(think_text)[0]


def _split_steps_impl(think_text: str) -> tuple[list[str], list[int]]:
    markers = list(_STEP_MARKER_RE.finditer(think_text))
    steps: list[str] = []
    labels: list[int] = []
    for i, marker in enumerate(markers):
        end = markers[i + 1].start() if i + 1 < len(markers) else len(think_text)
        text = think_text[marker.end():end].strip()
        if text:
            steps.append(text)
            labels.append(int(marker.group(1)))
    return steps, labels


@dataclass(frozen=True)
class RawRollout:
    """One completion as submitted for scoring."""

    prompt_id: str
    completion_text: str
    token_count: int

    @classmethod
    def from_completion(
        cls, prompt_id: str, completion_text: str, token_policy: str = "whitespace"
    ) -> "RawRollout":
        return cls(prompt_id, completion_text, count_tokens(completion_text, token_policy))


# Token policies are pluggable; whitespace is the deterministic default used
# for the length reward.
TOKEN_POLICIES: dict[str, object] = {
    "whitespace": lambda text: len(text.split()),
    "characters": lambda text: len(text),
}


def count_tokens(text: str, policy: str = "whitespace") -> int:
    try:
        counter = TOKEN_POLICIES[policy]
    except KeyError:
        raise ValueError(f"unknown token policy: {policy!r}") from None
    return counter(text)


@dataclass(frozen=True)
class ParsedRollout:
    """A completion decomposed into the fields the rewards consume."""

    chart_type: str | None
    chart_type_raw: str | None
    table: CanonicalTable | None
    table_failure: str | None
    steps: tuple[str, ...]
    answer: str | None
    schema_ok: bool
    parse_diagnostics: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "chart_type": self.chart_type,
            "chart_type_raw": self.chart_type_raw,
            "table": None
            if self.table is None
            else {"columns": list(self.table.columns), "rows": [list(r) for r in self.table.rows]},
            "table_failure": self.table_failure,
            "steps": list(self.steps),
            "answer": self.answer,
            "schema_ok": self.schema_ok,
            "parse_diagnostics": list(self.parse_diagnostics),
        }


def parse_rollout(raw: RawRollout) -> ParsedRollout:
    """Decompose a completion; never raises on malformed input.

    Structural checks: think and answer blocks present, think strictly before
    answer, type and table tags nested inside think, table JSON parses.
    STEP_ORDER and UNKNOWN_CHART_TYPE are advisory diagnostics that do not
    affect schema_ok.
    """
    text = raw.completion_text
    diagnostics: list[str] = []

    think = _THINK_RE.search(text)
    answer = _ANSWER_RE.search(text)
    if think is None:
        diagnostics.append(MISSING_THINK_BLOCK)
    if answer is None:
        diagnostics.append(MISSING_ANSWER_BLOCK)
    if think is not None and answer is not None and answer.start() < think.end():
        diagnostics.append(BLOCK_ORDER)

    chart_type_raw: str | None = None
    chart_type: str | None = None
    table: CanonicalTable | None = None
    table_failure: str | None = None
    steps: list[str] = []

    if think is not None:
        think_text = think.group(1)
        type_match = _TYPE_RE.search(think_text)
        if type_match is None:
            diagnostics.append(MISSING_TYPE_TAG)
        else:
            chart_type_raw = type_match.group(1).strip()
            chart_type = normalize_chart_type(chart_type_raw)
            if chart_type is None:
                diagnostics.append(UNKNOWN_CHART_TYPE)

        table_match = _TABLE_RE.search(think_text)
        if table_match is None:
            diagnostics.append(MISSING_TABLE_TAG)
        else:
            parsed = parse_table_json(table_match.group(1).strip())
            if isinstance(parsed, ParseFailure):
                table_failure = parsed.reason
                diagnostics.append(TABLE_VIOLATION_PREFIX + parsed.reason)
            else:
                table = parsed

        steps, labels = _split_steps_impl(think_text)
        if any(b <= a for a, b in zip(labels, labels[1:])):
            diagnostics.append(STEP_ORDER)

    structural = {
        MISSING_THINK_BLOCK,
        MISSING_ANSWER_BLOCK,
        BLOCK_ORDER,
        MISSING_TYPE_TAG,
        MISSING_TABLE_TAG,
    }
    schema_ok = table is not None and not any(
        d in structural or d.startswith(TABLE_VIOLATION_PREFIX) for d in diagnostics
    )

    return ParsedRollout(
        chart_type=chart_type,
        chart_type_raw=chart_type_raw,
        table=table,
        table_failure=table_failure,
        steps=tuple(steps),
        answer=answer.group(1).strip() if answer is not None else None,
        schema_ok=schema_ok,
        parse_diagnostics=tuple(diagnostics),
    )
