"""Similarity scoring and the process-conformity rewards."""

import numpy as np
import pytest

from chartreward.config import RewardConfig
from chartreward.conformity import (
    HashedTrigramProvider,
    MemoizingProvider,
    RemoteEmbeddingProvider,
    RewardUnavailable,
    evidence_gathering_reward,
    process_conformity,
    reasoning_alignment_reward,
    similarity,
)

WORDS = ["read", "the", "axis", "sum", "bars", "legend", "compare", "values", "peak"]


def random_step(rng) -> str:
    return " ".join(WORDS[int(rng.integers(0, len(WORDS)))] for _ in range(int(rng.integers(1, 6))))


class TestSimilarity:
    def test_identical_strings(self, provider):
        assert similarity("sum the bars", "sum the bars", provider) == 1.0

    def test_token_disjoint_orthogonal(self, provider):
        # Trigram-disjoint inputs hash to disjoint buckets here: cosine 0.
        assert similarity("aaaa", "bbbb", provider) == 0.5

    def test_related_phrases_in_open_interval(self, provider):
        value = similarity("sum the two bars", "add bar values", provider)
        assert 0.5 < value < 1.0

    def test_empty_string_is_neutral(self, provider):
        assert similarity("", "anything", provider) == 0.5
        assert similarity("", "", provider) == 0.5

    def test_symmetry_fuzz(self, provider):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a, b = random_step(rng), random_step(rng)
            assert similarity(a, b, provider) == similarity(b, a, provider)
            assert 0.0 <= similarity(a, b, provider) <= 1.0

    def test_self_similarity_fuzz(self, provider):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = random_step(rng)
            assert similarity(a, a, provider) == 1.0

    def test_deterministic_vectors(self, provider):
        v1 = provider.embed(["look at the legend"])
        v2 = provider.embed(["look at the legend"])
        np.testing.assert_array_equal(v1, v2)
        assert v1.shape == (1, provider.dimension)


class TestEvidenceGathering:
    def test_identical_steps(self, provider, cfg):
        steps = ["read axis", "gather data", "sum values", "verify"]
        assert evidence_gathering_reward(steps, steps, cfg.m, provider) == 1.0

    def test_empty_prediction(self, provider, cfg):
        assert evidence_gathering_reward([], ["a", "b", "c"], cfg.m, provider) == 0.0

    def test_partial_prefix(self, provider):
        # m-1 perfect steps then nothing: (1 + 1 + 0) / 3.
        steps = ["read axis", "gather data"]
        assert evidence_gathering_reward(steps, steps + ["more"], 3, provider) == pytest.approx(2 / 3)

    def test_m_must_be_positive(self, provider):
        with pytest.raises(ValueError):
            evidence_gathering_reward(["a"], ["a"], 0, provider)


class TestReasoningAlignment:
    def test_identical_remainders(self, provider):
        steps = ["a", "b", "c", "compute the total", "verify it"]
        assert reasoning_alignment_reward(steps, steps, 3, provider) == 1.0

    def test_asymmetric_empty(self, provider):
        pred = ["a", "b", "c"]  # nothing after the prefix
        gt = ["a", "b", "c", "do the math"]
        assert reasoning_alignment_reward(pred, gt, 3, provider) == 0.0
        assert reasoning_alignment_reward(gt, pred, 3, provider) == 0.0

    def test_both_empty_remainders(self, provider):
        pred = ["a", "b"]
        gt = ["x", "y", "z"]
        assert reasoning_alignment_reward(pred, gt, 3, provider) == 1.0


class TestProcessConformity:
    def test_perfect_trace(self, provider, cfg):
        steps = ["read", "gather", "sum", "verify"]
        r_eg, r_rs, r_proc = process_conformity(steps, steps, cfg, provider)
        assert (r_eg, r_rs, r_proc) == (1.0, 1.0, 2.0)

    def test_zero_trace(self, provider, cfg):
        r_eg, r_rs, r_proc = process_conformity([], ["a", "b", "c", "d"], cfg, provider)
        assert (r_eg, r_rs, r_proc) == (0.0, 0.0, 0.0)

    def test_weighted_alpha(self, provider):
        cfg = RewardConfig(alpha=2.0)
        steps = ["a", "b", "c"]
        gt = ["a", "b", "c", "rest"]
        r_eg, r_rs, r_proc = process_conformity(steps, gt, cfg, provider)
        assert r_eg == 1.0 and r_rs == 0.0
        assert r_proc == pytest.approx(2.0 / 3.0)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_bounds_fuzz(self, provider, alpha):
        cfg = RewardConfig(alpha=alpha)
        rng = np.random.default_rng(7)
        for _ in range(100):
            pred = [random_step(rng) for _ in range(int(rng.integers(0, 6)))]
            gt = [random_step(rng) for _ in range(int(rng.integers(0, 6)))]
            r_eg, r_rs, r_proc = process_conformity(pred, gt, cfg, provider)
            assert 0.0 <= r_eg <= 1.0
            assert 0.0 <= r_rs <= 1.0
            assert 0.0 <= r_proc <= 2.0

    def test_identical_trace_exact_two_for_any_alpha(self, provider):
        steps = ["read the axis", "gather", "sum", "conclude"]
        for alpha in (0.5, 1.0, 2.0):
            cfg = RewardConfig(alpha=alpha)
            _, _, r_proc = process_conformity(steps, steps, cfg, provider)
            assert r_proc == 2.0


class TestProviderSwap:
    def test_remote_stub_keeps_invariants(self, embed_server, cfg):
        remote = RemoteEmbeddingProvider(endpoint=embed_server, retries=0)
        fallback = HashedTrigramProvider()
        rng = np.random.default_rng(11)
        differs = False
        for _ in range(20):
            a, b = random_step(rng), random_step(rng)
            r_val = similarity(a, b, remote)
            f_val = similarity(a, b, fallback)
            assert 0.0 <= r_val <= 1.0
            assert r_val == similarity(b, a, remote)
            if a != b and abs(r_val - f_val) > 1e-9:
                differs = True
        assert differs  # different provider, different values

    def test_remote_identical_trace_still_exact(self, embed_server):
        remote = RemoteEmbeddingProvider(endpoint=embed_server, retries=0)
        steps = ["read", "gather", "sum", "verify"]
        _, _, r_proc = process_conformity(steps, steps, RewardConfig(), remote)
        assert r_proc == 2.0

    def test_remote_failure_raises(self):
        dead = RemoteEmbeddingProvider(endpoint="http://127.0.0.1:9", retries=1, backoff=0.01)
        with pytest.raises(RewardUnavailable):
            dead.embed(["hello"])


class CountingProvider:
    def __init__(self):
        self.inner = HashedTrigramProvider()
        self.kind = self.inner.kind
        self.dimension = self.inner.dimension
        self.calls: list[int] = []

    def embed(self, texts):
        self.calls.append(len(texts))
        return self.inner.embed(texts)


class TestMemoization:
    def test_each_unique_string_embedded_once(self):
        counting = CountingProvider()
        memo = MemoizingProvider(counting)
        memo.embed(["a", "b", "a"])
        memo.embed(["b", "c"])
        assert sum(counting.calls) == 3  # a, b, c exactly once

    def test_memo_preserves_values(self, provider):
        memo = MemoizingProvider(provider)
        direct = provider.embed(["sum the bars", "read axis"])
        cached = memo.embed(["sum the bars", "read axis"])
        np.testing.assert_array_equal(direct, cached)
