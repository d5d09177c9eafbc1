"""Verifiable reward engine and GRPO math core for structured chart-reasoning
rollouts."""

__version__ = "0.1.0"

from .config import ConfigError, RewardConfig, load_config
from .conformity import (
    HashedTrigramProvider,
    MemoizingProvider,
    RemoteEmbeddingProvider,
    RewardUnavailable,
    evidence_gathering_reward,
    process_conformity,
    reasoning_alignment_reward,
    similarity,
)
from .grpo import (
    GroupAdvantages,
    GrpoHyper,
    RolloutGroup,
    ShapeError,
    ToyPolicy,
    clipped_surrogate,
    group_advantages,
    grpo_objective,
    kl_penalty,
    objective_gradient,
)
from .metrics import (
    DiscreteJoint,
    EvalRecord,
    OracleLogProbs,
    delta_log_p,
    entropy_gap,
    relaxed_accuracy,
    table_edit_distance,
)
from .parsing import (
    CHART_TYPES,
    ParsedRollout,
    RawRollout,
    normalize_chart_type,
    normalize_text,
    parse_rollout,
    split_steps,
)
from .rewards import (
    GroundTruth,
    RewardBreakdown,
    accuracy_reward,
    format_reward,
    length_reward,
    table_reward,
    total_reward,
    type_reward,
)
from .tables import CanonicalTable, ParseFailure, parse_table_json
from .toytask import TrainingReport, toy_train

__all__ = [
    "CanonicalTable",
    "CHART_TYPES",
    "ConfigError",
    "DiscreteJoint",
    "EvalRecord",
    "GroundTruth",
    "GroupAdvantages",
    "GrpoHyper",
    "HashedTrigramProvider",
    "MemoizingProvider",
    "OracleLogProbs",
    "ParseFailure",
    "ParsedRollout",
    "RawRollout",
    "RemoteEmbeddingProvider",
    "RewardBreakdown",
    "RewardConfig",
    "RewardUnavailable",
    "RolloutGroup",
    "ShapeError",
    "ToyPolicy",
    "TrainingReport",
    "accuracy_reward",
    "clipped_surrogate",
    "delta_log_p",
    "entropy_gap",
    "evidence_gathering_reward",
    "format_reward",
    "group_advantages",
    "grpo_objective",
    "kl_penalty",
    "length_reward",
    "load_config",
    "normalize_chart_type",
    "normalize_text",
    "objective_gradient",
    "parse_rollout",
    "parse_table_json",
    "process_conformity",
    "reasoning_alignment_reward",
    "relaxed_accuracy",
    "similarity",
    "split_steps",
    "table_edit_distance",
    "table_reward",
    "total_reward",
    "toy_train",
    "type_reward",
]
