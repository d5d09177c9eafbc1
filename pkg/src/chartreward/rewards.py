"""Schema rewards (format, length, accuracy), surrogate-task rewards (chart
type, table reconstruction) and the weighted total.

Component ranges: r_fmt, r_acc, r_type in {0,1}; r_len in {0, warmup, 1};
r_table in [0,2] strict / [0,3] warm_start; r_proc in [0,2].  The total is
r_schema + lambda1*r_surr + lambda2*r_proc.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .config import WARM_START, RewardConfig
from .parsing import ParsedRollout, RawRollout, normalize_text
from .tables import MISSING_KEY, SYNTAX, CanonicalTable, ParseFailure, parse_number, render_number

# Sentinel table failure for completions with no <table> tag at all; scores
# like an unparseable body (no warm-start bonuses either).
MISSING_TABLE = "MISSING_TABLE"


@dataclass(frozen=True)
class GroundTruth:
    """Reference answer, chart type, table and rationale steps for one prompt."""

    answer: str
    chart_type: str
    table: CanonicalTable
    reference_steps: tuple[str, ...] = ()


@dataclass(frozen=True)
class RewardBreakdown:
    r_fmt: float
    r_len: float
    r_acc: float
    r_type: float
    r_table: float
    r_eg: float
    r_rs: float
    r_schema: float
    r_surr: float
    r_proc: float
    r_total: float

    def to_dict(self) -> dict:
        return {
            "r_fmt": self.r_fmt,
            "r_len": self.r_len,
            "r_acc": self.r_acc,
            "r_type": self.r_type,
            "r_table": self.r_table,
            "r_eg": self.r_eg,
            "r_rs": self.r_rs,
            "r_schema": self.r_schema,
            "r_surr": self.r_surr,
            "r_proc": self.r_proc,
            "r_total": self.r_total,
        }


def format_reward(parsed: ParsedRollout) -> float:
    """1 iff every structural check passed."""
    return 1.0 if parsed.schema_ok else 0.0


def _filler_run(text: str, limit: int) -> bool:
    return re.search(r"\n{%d,}" % (limit + 1), text) is not None


def length_reward(raw: RawRollout, cfg: RewardConfig) -> float:
    """Stacked length reward with the contiguous-newline filler penalty.

    Full reward inside [eta1, eta2], the warm-up partial reward from the
    warm-up threshold up to eta1, zero otherwise.  A contiguous run of more
    than filler_run_limit newlines forces 0 regardless of length.
    """
    if _filler_run(raw.completion_text, cfg.filler_run_limit):
        return 0.0
    n = raw.token_count
    if cfg.eta1 <= n <= cfg.eta2:
        return 1.0
    if cfg.warmup_len_threshold <= n < cfg.eta1:
        return cfg.warmup_len_reward
    return 0.0


def accuracy_reward(answer: str | None, gt_answer: str, cfg: RewardConfig) -> float:
    """Scale-invariant numeric match within tau, else normalized exact match.

    The numeric branch applies only when both sides parse as numbers after
    normalization.  A numerically zero ground truth makes relative error
    undefined, so it falls back to exact match on the canonical rendering.
    """
    if answer is None:
        return 0.0
    pred_text = normalize_text(answer)
    gt_text = normalize_text(gt_answer)
    pred_num = parse_number(pred_text)
    gt_num = parse_number(gt_text)
    if pred_num is not None and gt_num is not None:
        if gt_num == 0:
            return 1.0 if render_number(pred_num) == render_number(gt_num) else 0.0
        return 1.0 if abs(pred_num - gt_num) / abs(gt_num) <= cfg.tau else 0.0
    return 1.0 if pred_text == gt_text else 0.0


def type_reward(pred: str | None, gt: str) -> float:
    """Exact match between canonical chart types; unknown predictions score 0."""
    return 1.0 if pred is not None and pred == gt else 0.0


def _header_term(pred: CanonicalTable, gt: CanonicalTable) -> float:
    pred_columns = set(pred.columns)
    return sum(1.0 for c in gt.columns if c in pred_columns) / len(gt.columns)


def _cell_term(pred: CanonicalTable, gt: CanonicalTable) -> float:
    total = 0.0
    for i, gt_row in enumerate(gt.rows):
        pred_row = pred.rows[i] if i < len(pred.rows) else ()
        matches = sum(
            1.0 for j, cell in enumerate(gt_row) if j < len(pred_row) and pred_row[j] == cell
        )
        total += matches / len(gt_row)
    return total / len(gt.rows)


def table_reward(
    pred: CanonicalTable | ParseFailure | None, gt: CanonicalTable, cfg: RewardConfig
) -> float:
    """Header membership plus index-aligned cell accuracy.

    strict: failures score 0.  warm_start adds the parse bonus for any
    syntactically valid object and the keys bonus once both schema keys are
    present, so near-miss tables keep a gradient toward validity.
    """
    if gt.n_columns < 1 or gt.n_rows < 1:
        raise ValueError("ground-truth table must have at least one column and one row")
    warm = cfg.table_bonus_mode == WARM_START
    if pred is None or isinstance(pred, ParseFailure):
        if not warm:
            return 0.0
        reason = MISSING_TABLE if pred is None else pred.reason
        if reason in (SYNTAX, MISSING_TABLE):
            return 0.0
        if reason == MISSING_KEY:
            return cfg.parse_bonus
        # RAGGED / EXTRA_KEY: parsed object with both keys present.
        return cfg.parse_bonus + cfg.keys_bonus
    score = _header_term(pred, gt) + _cell_term(pred, gt)
    if warm:
        score += cfg.parse_bonus + cfg.keys_bonus
    return score


def combine_conformity(r_eg: float, r_rs: float, alpha: float) -> float:
    """Weighted process-conformity total, kept in [0,2] for any alpha > 0."""
    if alpha == 1.0:
        return r_eg + r_rs
    return 2.0 * (r_eg + alpha * r_rs) / (1.0 + alpha)


def total_reward(
    parsed: ParsedRollout,
    raw: RawRollout,
    gt: GroundTruth,
    cfg: RewardConfig,
    conformity: tuple[float, float],
) -> RewardBreakdown:
    """Assemble the full breakdown from precomputed conformity values."""
    r_eg, r_rs = conformity
    r_fmt = format_reward(parsed)
    r_len = length_reward(raw, cfg)
    r_acc = accuracy_reward(parsed.answer, gt.answer, cfg)
    r_type = type_reward(parsed.chart_type, gt.chart_type)
    pred_table: CanonicalTable | ParseFailure | None
    if parsed.table is not None:
        pred_table = parsed.table
    elif parsed.table_failure is not None:
        pred_table = ParseFailure(parsed.table_failure)
    else:
        pred_table = None
    r_table = table_reward(pred_table, gt.table, cfg)
    r_schema = r_fmt + r_len + r_acc
    r_surr = r_type + r_table
    r_proc = combine_conformity(r_eg, r_rs, cfg.alpha)
    return RewardBreakdown(
        r_fmt=r_fmt,
        r_len=r_len,
        r_acc=r_acc,
        r_type=r_type,
        r_table=r_table,
        r_eg=r_eg,
        r_rs=r_rs,
        r_schema=r_schema,
        r_surr=r_surr,
        r_proc=r_proc,
        r_total=r_schema + cfg.lambda1 * r_surr + cfg.lambda2 * r_proc,
    )
