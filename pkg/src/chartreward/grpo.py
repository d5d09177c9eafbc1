"""Group-relative advantages, the clipped token-level surrogate, and the
sequence-level KL penalty, plus analytic gradients for the toy policy.

Advantages use the population standard deviation and the max(1, s) floor
exactly as written; the surrogate averages min(ratio*A, clip(ratio)*A) per
token and then per rollout; the KL term is the exact per-position categorical
KL averaged over a rollout's token positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import ConfigError


class ShapeError(ValueError):
    """Mismatched rollout/logprob/policy shapes."""


@dataclass(frozen=True)
class GroupAdvantages:
    mean: float
    std: float
    advantages: tuple[float, ...]


def group_advantages(rewards: Sequence[float]) -> GroupAdvantages:
    """Convert absolute group rewards to relative advantages.

    A_j = (R_j - mean) / max(1, std) with the population (1/G) variance.
    """
    g = len(rewards)
    if g < 2:
        raise ConfigError(f"advantage computation needs a group of >= 2 rollouts, got {g}")
    values = [float(r) for r in rewards]
    # math.fsum is exactly rounded, so reordering a group cannot perturb the
    # statistics even at the last ulp.
    mean = math.fsum(values) / g
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / g)
    denom = max(1.0, std)
    return GroupAdvantages(mean=mean, std=std, advantages=tuple((v - mean) / denom for v in values))


@dataclass(frozen=True)
class RolloutGroup:
    """G rollouts for one prompt with per-token logprobs under both policies."""

    prompt_id: str
    rewards: tuple[float, ...]
    token_logprobs_old: tuple[tuple[float, ...], ...]
    token_logprobs_new: tuple[tuple[float, ...], ...]
    lengths: tuple[int, ...]

    def __post_init__(self) -> None:
        g = len(self.rewards)
        if not (len(self.token_logprobs_old) == len(self.token_logprobs_new) == len(self.lengths) == g):
            raise ShapeError("group fields must all have G entries")
        for old, new, n in zip(self.token_logprobs_old, self.token_logprobs_new, self.lengths):
            if len(old) != n or len(new) != n:
                raise ShapeError(f"logprob list length must equal rollout length {n}")


def clipped_surrogate(group: RolloutGroup, adv: GroupAdvantages, epsilon: float) -> float:
    """(1/G) sum_j (1/|o_j|) sum_t min(rho*A_j, clip(rho, 1-eps, 1+eps)*A_j)."""
    if len(adv.advantages) != len(group.rewards):
        raise ShapeError("advantages and group must have the same G")
    total = 0.0
    for a, old, new, n in zip(
        adv.advantages, group.token_logprobs_old, group.token_logprobs_new, group.lengths
    ):
        if n == 0:
            continue
        rho = np.exp(np.asarray(new) - np.asarray(old))
        clipped = np.clip(rho, 1.0 - epsilon, 1.0 + epsilon)
        total += float(np.minimum(rho * a, clipped * a).mean())
    return total / len(group.rewards)


@dataclass
class ToyPolicy:
    """Per-position categorical policy: logits[t, v] over a tiny vocabulary."""

    logits: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        self.logits = np.asarray(self.logits, dtype=float)
        if self.logits.ndim != 2:
            raise ShapeError(f"logits must be [positions, vocab], got shape {self.logits.shape}")

    @property
    def seq_len(self) -> int:
        return self.logits.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.logits.shape[1]

    def log_probs(self) -> np.ndarray:
        z = self.logits
        m = z.max(axis=1, keepdims=True)
        return z - m - np.log(np.exp(z - m).sum(axis=1, keepdims=True))

    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs())

    def sample(self, rng: np.random.Generator, length: int | None = None) -> list[int]:
        length = self.seq_len if length is None else length
        if length > self.seq_len:
            raise ShapeError(f"cannot sample {length} positions from {self.seq_len}")
        p = self.probs()
        return [int(rng.choice(self.vocab_size, p=p[t])) for t in range(length)]

    def token_logprobs(self, tokens: Sequence[int]) -> list[float]:
        lp = self.log_probs()
        if len(tokens) > self.seq_len:
            raise ShapeError("rollout longer than the policy")
        return [float(lp[t, tok]) for t, tok in enumerate(tokens)]


def _check_same_shape(a: ToyPolicy, b: ToyPolicy) -> None:
    if a.logits.shape != b.logits.shape:
        raise ShapeError(f"policy shapes differ: {a.logits.shape} vs {b.logits.shape}")


def _positionwise_kl(policy_new: ToyPolicy, policy_ref: ToyPolicy) -> np.ndarray:
    """Exact KL(pi_new(.|t) || pi_ref(.|t)) for every position t."""
    lp_new = policy_new.log_probs()
    lp_ref = policy_ref.log_probs()
    return (np.exp(lp_new) * (lp_new - lp_ref)).sum(axis=1)


def kl_penalty(policy_new: ToyPolicy, policy_ref: ToyPolicy, rollout_tokens: Sequence[int]) -> float:
    """Average the exact per-position categorical KL over the rollout's positions."""
    _check_same_shape(policy_new, policy_ref)
    n = len(rollout_tokens)
    if n > policy_new.seq_len:
        raise ShapeError("rollout longer than the policy")
    if n == 0:
        return 0.0
    return float(_positionwise_kl(policy_new, policy_ref)[:n].mean())


@dataclass(frozen=True)
class GrpoHyper:
    epsilon: float = 0.2
    beta: float = 0.04
    group_size: int = 4
    learning_rate: float = 0.5
    epochs: int = 500
    # Optimization steps taken per sampled rollout batch; 1 means the behavior
    # policy is refreshed every step.
    steps_per_rollout: int = 1

    def __post_init__(self) -> None:
        if not (0 < self.epsilon < 1):
            raise ConfigError(f"epsilon must be in (0,1), got {self.epsilon}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.group_size < 2:
            raise ConfigError(f"group size must be >= 2, got {self.group_size}")
        if self.epochs < 1 or self.steps_per_rollout < 1:
            raise ConfigError("epochs and steps_per_rollout must be >= 1")


def grpo_objective(
    group: RolloutGroup,
    adv: GroupAdvantages,
    policies: tuple[ToyPolicy, ToyPolicy],
    hyper: GrpoHyper,
) -> float:
    """Clipped surrogate minus beta times the group-mean sequence KL."""
    policy_new, policy_ref = policies
    _check_same_shape(policy_new, policy_ref)
    surrogate = clipped_surrogate(group, adv, hyper.epsilon)
    kl_by_pos = _positionwise_kl(policy_new, policy_ref)
    kl = 0.0
    for n in group.lengths:
        if n > policy_new.seq_len:
            raise ShapeError("rollout longer than the policy")
        kl += float(kl_by_pos[:n].mean()) if n else 0.0
    return surrogate - hyper.beta * kl / len(group.lengths)


def build_group(
    prompt_id: str,
    token_ids: Sequence[Sequence[int]],
    rewards: Sequence[float],
    policy_new: ToyPolicy,
    policy_old: ToyPolicy,
) -> RolloutGroup:
    """Assemble a RolloutGroup by scoring token ids under both policies."""
    return RolloutGroup(
        prompt_id=prompt_id,
        rewards=tuple(float(r) for r in rewards),
        token_logprobs_old=tuple(tuple(policy_old.token_logprobs(t)) for t in token_ids),
        token_logprobs_new=tuple(tuple(policy_new.token_logprobs(t)) for t in token_ids),
        lengths=tuple(len(t) for t in token_ids),
    )


def objective_from_policies(
    policy_new: ToyPolicy,
    policy_old: ToyPolicy,
    policy_ref: ToyPolicy,
    token_ids: Sequence[Sequence[int]],
    adv: GroupAdvantages,
    hyper: GrpoHyper,
    prompt_id: str = "toy",
) -> float:
    """The GRPO objective as a function of the new policy's logits."""
    group = build_group(prompt_id, token_ids, [0.0] * len(token_ids), policy_new, policy_old)
    return grpo_objective(group, adv, (policy_new, policy_ref), hyper)


def objective_gradient(
    policy_new: ToyPolicy,
    policy_old: ToyPolicy,
    policy_ref: ToyPolicy,
    token_ids: Sequence[Sequence[int]],
    adv: GroupAdvantages,
    hyper: GrpoHyper,
) -> np.ndarray:
    """Analytic gradient of the GRPO objective wrt policy_new.logits.

    Softmax/categorical calculus by hand: for an unclipped token the surrogate
    contributes A*rho*(onehot - pi) at its position; tokens pinned flat by the
    clip contribute nothing.  The KL term contributes
    pi*(log(pi/ref) - KL_t) per position, weighted by how often that position
    appears across the group.
    """
    _check_same_shape(policy_new, policy_old)
    _check_same_shape(policy_new, policy_ref)
    g = len(token_ids)
    if g != len(adv.advantages):
        raise ShapeError("advantages and rollouts must have the same G")
    lp_new = policy_new.log_probs()
    lp_old = policy_old.log_probs()
    lp_ref = policy_ref.log_probs()
    pi = np.exp(lp_new)
    grad = np.zeros_like(policy_new.logits)

    for a, tokens in zip(adv.advantages, token_ids):
        n = len(tokens)
        if n == 0 or a == 0.0:
            continue
        if n > policy_new.seq_len:
            raise ShapeError("rollout longer than the policy")
        scale = 1.0 / (g * n)
        for t, tok in enumerate(tokens):
            rho = float(np.exp(lp_new[t, tok] - lp_old[t, tok]))
            if a > 0:
                active = rho <= 1.0 + hyper.epsilon
            else:
                active = rho >= 1.0 - hyper.epsilon
            if not active:
                continue
            coeff = scale * a * rho
            grad[t] -= coeff * pi[t]
            grad[t, tok] += coeff

    if hyper.beta > 0:
        kl_by_pos = (pi * (lp_new - lp_ref)).sum(axis=1)
        weight = np.zeros(policy_new.seq_len)
        for tokens in token_ids:
            n = len(tokens)
            if n:
                weight[:n] += 1.0 / (g * n)
        kl_grad = pi * ((lp_new - lp_ref) - kl_by_pos[:, None]) * weight[:, None]
        grad -= hyper.beta * kl_grad
    return grad
