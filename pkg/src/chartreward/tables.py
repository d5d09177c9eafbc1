"""Canonical table representation and the strict JSON table schema.

Tables arrive as JSON objects with exactly two keys, ``columns`` (a list of
scalars) and ``rows`` (a list of lists of scalars).  All scalars are stored as
canonical strings so that ``1``, ``1.0`` and ``"1"`` compare equal.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

# Failure reason codes, in check order.
SYNTAX = "SYNTAX"
MISSING_KEY = "MISSING_KEY"
EXTRA_KEY = "EXTRA_KEY"
RAGGED = "RAGGED"

_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True)
class ParseFailure:
    """Why a table body did not yield a CanonicalTable."""

    reason: str

    def __bool__(self) -> bool:
        return False


def render_number(x: float) -> str:
    """Canonical text for a numeric cell.

    Integers drop the decimal point; everything else keeps at most six
    fractional digits with trailing zeros stripped.
    """
    if not math.isfinite(x):
        raise ValueError(f"non-finite number has no canonical rendering: {x!r}")
    if x == int(x):
        return str(int(x))
    r = round(x, 6)
    if r == int(r):
        return str(int(r))
    return f"{r:.6f}".rstrip("0").rstrip(".")


def parse_number(s: str) -> float | None:
    """Parse a plain decimal/scientific literal; None for anything else.

    Deliberately stricter than float(): no inf/nan, no underscores, no
    surrounding junk.
    """
    if _NUMBER_RE.match(s):
        return float(s)
    return None


def canonical_cell(value: object) -> str:
    """Render one scalar cell as its canonical string."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, float)):
        return render_number(float(value))
    text = str(value).strip()
    num = parse_number(text)
    if num is not None:
        return render_number(num)
    return text


def _is_scalar(value: object) -> bool:
    return value is None or isinstance(value, (str, int, float, bool))


@dataclass(frozen=True)
class CanonicalTable:
    """Header list plus rectangular row matrix, all cells canonical strings."""

    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...] = field(default=())

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"ragged table: row of length {len(row)} vs {len(self.columns)} columns"
                )

    @classmethod
    def from_values(cls, columns: list, rows: list) -> "CanonicalTable":
        """Build from raw scalars, canonicalizing every cell."""
        return cls(
            columns=tuple(canonical_cell(c) for c in columns),
            rows=tuple(tuple(canonical_cell(v) for v in row) for row in rows),
        )

    def to_schema_text(self) -> str:
        """Serialize back to the two-key JSON object form."""
        return json.dumps(
            {"columns": list(self.columns), "rows": [list(r) for r in self.rows]},
            ensure_ascii=False,
        )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_columns(self) -> int:
        return len(self.columns)


def _reject_json_constant(value: str) -> float:
    raise ValueError(f"non-standard JSON constant: {value}")


def parse_table_json(text: str) -> CanonicalTable | ParseFailure:
    """Parse a table body against the two-key schema.

    Returns ParseFailure with a reason code instead of raising; callers map
    failures to zero table reward.  Checks run in a fixed order: SYNTAX,
    MISSING_KEY, EXTRA_KEY, RAGGED (shape violations, including nested
    structures in cells, count as RAGGED).
    """
    try:
        obj = json.loads(text, parse_constant=_reject_json_constant)
    except (ValueError, RecursionError):
        return ParseFailure(SYNTAX)
    if not isinstance(obj, dict):
        return ParseFailure(SYNTAX)
    if "columns" not in obj or "rows" not in obj:
        return ParseFailure(MISSING_KEY)
    if set(obj) != {"columns", "rows"}:
        return ParseFailure(EXTRA_KEY)
    columns, rows = obj["columns"], obj["rows"]
    if not isinstance(columns, list) or not all(_is_scalar(c) for c in columns):
        return ParseFailure(RAGGED)
    if not isinstance(rows, list):
        return ParseFailure(RAGGED)
    for row in rows:
        if not isinstance(row, list) or not all(_is_scalar(v) for v in row):
            return ParseFailure(RAGGED)
        if len(row) != len(columns):
            return ParseFailure(RAGGED)
    return CanonicalTable.from_values(columns, rows)
