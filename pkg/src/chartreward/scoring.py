"""Batch scoring: parse, score and group completions, then attach
group-relative advantages.

Items sharing a prompt_id form one rollout group; that grouping is the wire
contract GRPO trainers rely on, not a convenience.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .config import RewardConfig
from .conformity import EmbeddingProvider, MemoizingProvider, process_conformity
from .grpo import group_advantages
from .parsing import RawRollout, normalize_chart_type, parse_rollout
from .rewards import GroundTruth, RewardBreakdown, total_reward
from .tables import ParseFailure, parse_table_json

SINGLETON_GROUP = "SINGLETON_GROUP"


class ProtocolError(ValueError):
    """Request rejected before scoring; carries a code and a field path."""

    def __init__(self, code: str, field: str, message: str):
        self.code = code
        self.field = field
        super().__init__(message)

    def to_dict(self) -> dict:
        return {"code": self.code, "field": self.field, "message": str(self)}


@dataclass(frozen=True)
class ScoreItem:
    prompt_id: str
    completion: str
    ground_truth: GroundTruth


def ground_truth_from_dict(obj: dict, where: str) -> GroundTruth:
    """Validate one wire ground-truth object; errors carry the field path."""
    if not isinstance(obj, dict):
        raise ProtocolError("BAD_GROUND_TRUTH", where, "ground_truth must be an object")
    for key in ("answer", "chart_type", "table"):
        if key not in obj:
            raise ProtocolError("MISSING_FIELD", f"{where}.{key}", f"missing {key}")
    chart_type = normalize_chart_type(str(obj["chart_type"]))
    if chart_type is None:
        raise ProtocolError(
            "UNKNOWN_CHART_TYPE",
            f"{where}.chart_type",
            f"not a canonical chart type: {obj['chart_type']!r}",
        )
    table_obj = obj["table"]
    if isinstance(table_obj, dict):
        parsed = parse_table_json(json.dumps(table_obj))
    else:
        parsed = parse_table_json(str(table_obj))
    if isinstance(parsed, ParseFailure):
        raise ProtocolError(
            "BAD_TABLE", f"{where}.table", f"ground-truth table rejected: {parsed.reason}"
        )
    if parsed.n_columns < 1 or parsed.n_rows < 1:
        raise ProtocolError("BAD_TABLE", f"{where}.table", "ground-truth table must be nonempty")
    steps = obj.get("reference_steps", [])
    if not isinstance(steps, list):
        raise ProtocolError(
            "BAD_REFERENCE_STEPS", f"{where}.reference_steps", "reference_steps must be a list"
        )
    return GroundTruth(
        answer=str(obj["answer"]),
        chart_type=chart_type,
        table=parsed,
        reference_steps=tuple(str(s) for s in steps),
    )


def score_item(
    item: ScoreItem, cfg: RewardConfig, provider: EmbeddingProvider
) -> RewardBreakdown:
    """Score one completion against its ground truth."""
    raw = RawRollout.from_completion(item.prompt_id, item.completion, cfg.token_policy)
    parsed = parse_rollout(raw)
    r_eg, r_rs, _ = process_conformity(
        list(parsed.steps), list(item.ground_truth.reference_steps), cfg, provider
    )
    return total_reward(parsed, raw, item.ground_truth, cfg, (r_eg, r_rs))


def score_batch_items(
    items: list[ScoreItem], cfg: RewardConfig, provider: EmbeddingProvider
) -> dict:
    """Score a batch and compute within-group advantages.

    Deterministic given (items, cfg) under a deterministic provider; the
    response dict has a fixed key order so serializations are replayable.
    """
    if not items:
        raise ProtocolError("EMPTY_BATCH", "items", "items must be non-empty")
    for i, item in enumerate(items):
        if not item.completion:
            raise ProtocolError(
                "EMPTY_COMPLETION", f"items[{i}].completion", "completion must be non-empty"
            )
    memo = MemoizingProvider(provider)
    breakdowns = [score_item(item, cfg, memo) for item in items]

    group_order: list[str] = []
    group_indices: dict[str, list[int]] = {}
    for i, item in enumerate(items):
        if item.prompt_id not in group_indices:
            group_order.append(item.prompt_id)
            group_indices[item.prompt_id] = []
        group_indices[item.prompt_id].append(i)

    advantages = [0.0] * len(items)
    groups = []
    for prompt_id in group_order:
        indices = group_indices[prompt_id]
        rewards = [breakdowns[i].r_total for i in indices]
        warnings: list[str] = []
        if len(indices) == 1:
            mean, std = rewards[0], 0.0
            warnings.append(SINGLETON_GROUP)
        else:
            adv = group_advantages(rewards)
            mean, std = adv.mean, adv.std
            for i, a in zip(indices, adv.advantages):
                advantages[i] = float(a)
        groups.append({"prompt_id": prompt_id, "mean": mean, "std": std, "warnings": warnings})

    out_items = []
    index_within_group = {pid: 0 for pid in group_order}
    for i, (item, breakdown) in enumerate(zip(items, breakdowns)):
        idx = index_within_group[item.prompt_id]
        index_within_group[item.prompt_id] += 1
        out_items.append(
            {
                "prompt_id": item.prompt_id,
                "index": idx,
                "breakdown": breakdown.to_dict(),
                "advantage": advantages[i],
            }
        )
    return {"items": out_items, "groups": groups}
