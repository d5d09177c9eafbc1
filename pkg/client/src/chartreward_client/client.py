"""Thin synchronous client for the reward-scoring wire protocol.

One POST /score call per batch; items are never reordered or dropped, so the
results line up with the input lists.  Transient failures (connection errors,
timeouts, 5xx) are retried with exponential backoff; protocol rejections
(4xx) fail immediately.  Both paths raise RewardServiceError.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import requests


class RewardServiceError(Exception):
    """The service could not score the batch.

    ``attempts`` is how many wire calls were made; ``last_error`` carries the
    last protocol-error body when the server returned one.
    """

    def __init__(self, message: str, attempts: int, last_error: dict | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.last_error = last_error


@dataclass(frozen=True)
class ClientConfig:
    endpoint: str
    timeout: float = 30.0
    retries: int = 2
    backoff_base: float = 0.5

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError(f"timeout must be > 0, got {self.timeout}")
        if self.retries < 0:
            raise ValueError(f"retries must be >= 0, got {self.retries}")


class ScoredRollout(NamedTuple):
    total: float
    breakdown: dict
    advantage: float


class RewardClient:
    """One instance per worker process; instances share no state."""

    def __init__(self, config: ClientConfig):
        self.config = config
        self._score_url = config.endpoint.rstrip("/") + "/score"
        self._health_url = config.endpoint.rstrip("/") + "/health"

    def score(
        self,
        completions: Sequence[str],
        ground_truths: Sequence[dict],
        prompt_ids: Sequence[str],
    ) -> list[ScoredRollout]:
        """Score a batch; results come back in input order.

        Raises ValueError locally (no wire call) on mismatched list lengths
        and RewardServiceError once retries are exhausted.
        """
        if not (len(completions) == len(ground_truths) == len(prompt_ids)):
            raise ValueError(
                "completions, ground_truths and prompt_ids must have equal lengths "
                f"({len(completions)}, {len(ground_truths)}, {len(prompt_ids)})"
            )
        body = {
            "items": [
                {"prompt_id": pid, "completion": completion, "ground_truth": gt}
                for pid, completion, gt in zip(prompt_ids, completions, ground_truths)
            ]
        }
        payload = self._post_with_retries(body)
        items = payload.get("items", [])
        if len(items) != len(completions):
            raise RewardServiceError(
                f"service returned {len(items)} results for {len(completions)} items",
                attempts=1,
            )
        return [
            ScoredRollout(
                total=row["breakdown"]["r_total"],
                breakdown=row["breakdown"],
                advantage=row["advantage"],
            )
            for row in items
        ]

    def health(self) -> dict:
        resp = requests.get(self._health_url, timeout=self.config.timeout)
        resp.raise_for_status()
        return resp.json()

    def _post_with_retries(self, body: dict) -> dict:
        attempts = 0
        last_error: dict | None = None
        last_message = "unknown failure"
        for attempt in range(self.config.retries + 1):
            attempts += 1
            try:
                resp = requests.post(self._score_url, json=body, timeout=self.config.timeout)
            except requests.RequestException as exc:
                last_message = f"connection failed: {exc}"
            else:
                if resp.status_code < 400:
                    return resp.json()
                last_error = self._error_body(resp)
                last_message = f"HTTP {resp.status_code}: {last_error}"
                if resp.status_code < 500:
                    # The request itself is wrong; retrying cannot help.
                    raise RewardServiceError(last_message, attempts, last_error)
            if attempt < self.config.retries:
                time.sleep(self.config.backoff_base * (2**attempt))
        raise RewardServiceError(last_message, attempts, last_error)

    @staticmethod
    def _error_body(resp: requests.Response) -> dict:
        try:
            return resp.json().get("error", {})
        except ValueError:
            return {"message": resp.text[:200]}


def reward_fn(client: RewardClient) -> Callable[[Sequence[str], Sequence[dict], Sequence[str]], list[float]]:
    """Adaptor returning scalar totals, shaped for RL-trainer reward callbacks."""

    def fn(
        completions: Sequence[str], ground_truths: Sequence[dict], prompt_ids: Sequence[str]
    ) -> list[float]:
        return [row.total for row in client.score(completions, ground_truths, prompt_ids)]

    return fn
