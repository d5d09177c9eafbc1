"""Process-conformity rewards over a pluggable text-embedding provider.

Similarity is (1 + cosine)/2 in [0,1].  The evidence-gathering reward averages
step-wise similarity over the first m steps; the reasoning-alignment reward
compares the concatenated remainders.  The deterministic fallback provider
hashes character trigrams so rewards stay reproducible offline.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
import requests

from .config import RewardConfig
from .rewards import combine_conformity

FALLBACK_DIMENSION = 512
FALLBACK_HASH_SEED = 1315423911


class RewardUnavailable(RuntimeError):
    """The embedding backend could not produce vectors; the batch fails loudly."""


class EmbeddingProvider(Protocol):
    kind: str
    dimension: int

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return one L2-normalized (or zero) vector per input string."""
        ...


@dataclass
class HashedTrigramProvider:
    """Deterministic fallback: hashed character-trigram term frequencies.

    Same string always maps to the same vector; the empty string maps to the
    zero vector, which similarity() treats as cosine 0.
    """

    dimension: int = FALLBACK_DIMENSION
    hash_seed: int = FALLBACK_HASH_SEED
    kind: str = "deterministic_fallback"

    def _grams(self, text: str) -> list[str]:
        text = text.lower()
        if len(text) < 3:
            return [text] if text else []
        return [text[i : i + 3] for i in range(len(text) - 2)]

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension))
        for row, text in enumerate(texts):
            for gram in self._grams(text):
                bucket = zlib.crc32(f"{self.hash_seed}:{gram}".encode("utf-8")) % self.dimension
                out[row, bucket] += 1.0
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out


@dataclass
class RemoteEmbeddingProvider:
    """HTTP provider: POST {endpoint}/embed with {"texts": [...]}.

    Retries transient failures; exhaustion raises RewardUnavailable so the
    batch scorer fails loudly instead of silently zeroing rewards.
    """

    endpoint: str
    dimension: int = 0  # learned from the first response when left 0
    timeout: float = 10.0
    retries: int = 2
    backoff: float = 0.5
    kind: str = "remote_service"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        url = self.endpoint.rstrip("/") + "/embed"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = requests.post(url, json={"texts": list(texts)}, timeout=self.timeout)
                resp.raise_for_status()
                vectors = resp.json()["vectors"]
                arr = np.asarray(vectors, dtype=float)
                if arr.shape[0] != len(texts):
                    raise RewardUnavailable(
                        f"embedding service returned {arr.shape[0]} vectors for {len(texts)} texts"
                    )
                if self.dimension == 0 and arr.size:
                    self.dimension = arr.shape[1]
                return arr
            except RewardUnavailable:
                raise
            except Exception as exc:  # noqa: BLE001 - network/JSON failures all retry
                last_error = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * (2**attempt))
        raise RewardUnavailable(f"embedding service unreachable: {last_error}")

    def reachable(self) -> bool:
        try:
            resp = requests.post(
                self.endpoint.rstrip("/") + "/embed", json={"texts": ["ping"]}, timeout=self.timeout
            )
            return resp.ok
        except Exception:  # noqa: BLE001
            return False


@dataclass
class MemoizingProvider:
    """Per-batch memo of identical strings around any provider."""

    inner: EmbeddingProvider
    _cache: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.inner.kind

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        missing = [t for t in dict.fromkeys(texts) if t not in self._cache]
        if missing:
            vectors = self.inner.embed(missing)
            for text, vec in zip(missing, vectors):
                self._cache[text] = vec
        return np.stack([self._cache[t] for t in texts]) if texts else np.zeros((0, 1))


def similarity(a: str, b: str, provider: EmbeddingProvider) -> float:
    """(1 + cos)/2 of the two embeddings; symmetric, exactly 1 for a == b.

    Zero-norm embeddings (the empty string under the fallback) force the
    cosine to 0, so the score is 0.5 rather than NaN.
    """
    if a == b and a != "":
        return 1.0
    vecs = provider.embed([a, b])
    na, nb = np.linalg.norm(vecs[0]), np.linalg.norm(vecs[1])
    if na == 0 or nb == 0:
        return 0.5
    cos = float(np.dot(vecs[0], vecs[1]) / (na * nb))
    cos = max(-1.0, min(1.0, cos))
    return (1.0 + cos) / 2.0


def evidence_gathering_reward(
    pred_steps: Sequence[str], gt_steps: Sequence[str], m: int, provider: EmbeddingProvider
) -> float:
    """Mean step-wise similarity over the first m steps; missing steps score 0."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    total = 0.0
    for i in range(m):
        if i < len(pred_steps) and i < len(gt_steps):
            total += similarity(pred_steps[i], gt_steps[i], provider)
    return total / m


def reasoning_alignment_reward(
    pred_steps: Sequence[str], gt_steps: Sequence[str], m: int, provider: EmbeddingProvider
) -> float:
    """Similarity of the concatenated post-prefix remainders.

    Both remainders empty scores 1 (nothing to diverge from); exactly one
    empty scores 0.
    """
    pred_rest = " ".join(pred_steps[m:])
    gt_rest = " ".join(gt_steps[m:])
    if not pred_rest and not gt_rest:
        return 1.0
    if not pred_rest or not gt_rest:
        return 0.0
    return similarity(pred_rest, gt_rest, provider)


def process_conformity(
    pred_steps: Sequence[str],
    gt_steps: Sequence[str],
    cfg: RewardConfig,
    provider: EmbeddingProvider,
) -> tuple[float, float, float]:
    """Return (r_eg, r_rs, r_proc) with the alpha-weighted combined total."""
    r_eg = evidence_gathering_reward(pred_steps, gt_steps, cfg.m, provider)
    r_rs = reasoning_alignment_reward(pred_steps, gt_steps, cfg.m, provider)
    return r_eg, r_rs, combine_conformity(r_eg, r_rs, cfg.alpha)
