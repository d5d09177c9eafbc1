"""Trainer-side client for the chartreward scoring service."""

__version__ = "0.1.0"

from .client import ClientConfig, RewardClient, RewardServiceError, ScoredRollout, reward_fn

__all__ = [
    "ClientConfig",
    "RewardClient",
    "RewardServiceError",
    "ScoredRollout",
    "reward_fn",
]
