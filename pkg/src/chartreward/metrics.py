"""Evaluation metrics: relaxed accuracy, table edit distance, explainable
information gain, and the conditional-entropy gap check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .parsing import normalize_chart_type, normalize_text
from .tables import CanonicalTable, ParseFailure, parse_number, render_number

RELAXED_THRESHOLD = 0.05
MAX_EDIT_DISTANCE = 2.0


class ValidationError(ValueError):
    """Malformed metric input (joint distribution or record)."""


@dataclass(frozen=True)
class EvalRecord:
    prompt_id: str
    prediction: str
    ground_truth: str
    predicted_table: CanonicalTable | ParseFailure | None = None
    gt_table: CanonicalTable | None = None
    predicted_type: str | None = None
    gt_type: str | None = None


@dataclass(frozen=True)
class OracleLogProbs:
    """Oracle log-probabilities of the gold answer with and without the rationale."""

    prompt_id: str
    logp_with_rationale: float
    logp_without: float

    def __post_init__(self) -> None:
        if self.logp_with_rationale > 0 or self.logp_without > 0:
            raise ValidationError(
                f"log-probabilities must be <= 0, got {self.logp_with_rationale}, {self.logp_without}"
            )


def relaxed_accuracy(pred: str, gt: str) -> float:
    """Numeric pairs pass within 5% relative error (inclusive); text needs an
    exact match after normalization.  Zero ground truth falls back to exact
    match on the canonical rendering (flag such records with gt_is_zero)."""
    pred_text = normalize_text(pred)
    gt_text = normalize_text(gt)
    pred_num = parse_number(pred_text)
    gt_num = parse_number(gt_text)
    if pred_num is not None and gt_num is not None:
        if gt_num == 0:
            return 1.0 if render_number(pred_num) == render_number(gt_num) else 0.0
        return 1.0 if abs(gt_num - pred_num) / abs(gt_num) <= RELAXED_THRESHOLD else 0.0
    return 1.0 if pred_text == gt_text else 0.0


def gt_is_zero(gt: str) -> bool:
    """True when the ground truth parses to numeric zero (relative error
    undefined, so the numeric branch degraded to exact match)."""
    return parse_number(normalize_text(gt)) == 0


def type_accuracy(pred: str | None, gt: str) -> float:
    """1 iff the prediction canonicalizes to the ground-truth chart family."""
    gt_label = normalize_chart_type(gt)
    if gt_label is None:
        raise ValidationError(f"ground-truth chart type is not canonical: {gt!r}")
    return 1.0 if pred is not None and normalize_chart_type(pred) == gt_label else 0.0


def table_edit_distance(pred: CanonicalTable | ParseFailure | None, gt: CanonicalTable) -> float:
    """Fraction of missing headers plus fraction of mismatched cells.

    Unparseable predictions score the 2.0 maximum (every header and cell
    counted wrong); the strict table reward is its exact complement.
    """
    if gt.n_columns < 1 or gt.n_rows < 1:
        raise ValidationError("ground-truth table must be nonempty")
    if pred is None or isinstance(pred, ParseFailure):
        return MAX_EDIT_DISTANCE
    pred_columns = set(pred.columns)
    header = sum(1.0 for c in gt.columns if c not in pred_columns) / len(gt.columns)
    cells = 0.0
    for i, gt_row in enumerate(gt.rows):
        pred_row = pred.rows[i] if i < len(pred.rows) else ()
        wrong = sum(
            1.0 for j, cell in enumerate(gt_row) if j >= len(pred_row) or pred_row[j] != cell
        )
        cells += wrong / len(gt_row)
    return header + cells / len(gt.rows)


def delta_log_p(rec: OracleLogProbs) -> float:
    """Positive when the rationale added certainty to the gold answer."""
    return rec.logp_with_rationale - rec.logp_without


@dataclass(frozen=True)
class DiscreteJoint:
    """Joint distribution over (chart image, query, chart type, table, answer)."""

    probabilities: np.ndarray  # shape (nx, nq, nc, nt, ny)

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "probabilities", p)
        if p.ndim != 5:
            raise ValidationError(f"joint must have 5 axes (X,Q,C,T,Y), got {p.ndim}")
        if (p < 0).any():
            raise ValidationError("joint probabilities must be nonnegative")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValidationError(f"joint must sum to 1, got {float(p.sum())!r}")


def _entropy(p: np.ndarray) -> float:
    flat = p.reshape(-1)
    nz = flat[flat > 0]
    return float(-(nz * np.log(nz)).sum())


def entropy_gap(joint: DiscreteJoint) -> float:
    """H(Y|X,Q) - H(Y|X,Q,C,T), in nats.

    Exactly the conditional mutual information I(Y; C,T | X,Q), so it is
    nonnegative up to float dust; values within -1e-9 of zero clamp to 0.
    """
    p = joint.probabilities
    p_xqy = p.sum(axis=(2, 3))
    p_xq = p_xqy.sum(axis=2)
    h_y_given_xq = _entropy(p_xqy) - _entropy(p_xq)
    p_xqct = p.sum(axis=4)
    h_y_given_all = _entropy(p) - _entropy(p_xqct)
    gap = h_y_given_xq - h_y_given_all
    if gap < -1e-9:
        raise ValidationError(f"entropy gap fell below the numerical floor: {gap}")
    return max(gap, 0.0)


def aggregate(
    values: Sequence[float],
    prompt_ids: Iterable[str],
    flags: Sequence[list[str]] | None = None,
) -> dict:
    """Batch report body: count, mean, and ordered per-record values."""
    vals = list(values)
    per_record = []
    for i, (pid, v) in enumerate(zip(prompt_ids, vals)):
        entry: dict = {"prompt_id": pid, "value": v}
        if flags is not None and flags[i]:
            entry["flags"] = list(flags[i])
        per_record.append(entry)
    return {
        "count": len(vals),
        "mean": float(np.mean(vals)) if vals else 0.0,
        "per_record": per_record,
    }
