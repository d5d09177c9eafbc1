"""Client conformance against stub servers plus a live end-to-end check."""

import json
from pathlib import Path

import pytest

from chartreward_client import ClientConfig, RewardClient, RewardServiceError, reward_fn

DATA = Path(__file__).parent / "data"
GOLDEN_REQUEST = json.loads((DATA / "golden_score_request.json").read_text())
GOLDEN_RESPONSE = json.loads((DATA / "golden_score_response.json").read_text())


def golden_inputs():
    items = GOLDEN_REQUEST["items"]
    return (
        [it["completion"] for it in items],
        [it["ground_truth"] for it in items],
        [it["prompt_id"] for it in items],
    )


class TestScore:
    def test_order_preserved_against_golden_fixture(self, golden_server):
        url, state = golden_server
        client = RewardClient(ClientConfig(endpoint=url))
        completions, gts, pids = golden_inputs()
        results = client.score(completions, gts, pids)
        assert state.calls == 1  # one wire call per batch
        assert len(results) == len(completions)
        for got, want in zip(results, GOLDEN_RESPONSE["items"]):
            assert got.total == want["breakdown"]["r_total"]
            assert got.breakdown == want["breakdown"]
            assert got.advantage == want["advantage"]
        # The request body mirrors the inputs in order.
        sent = state.bodies[0]["items"]
        assert [it["prompt_id"] for it in sent] == pids

    def test_zero_variance_group_passthrough(self, golden_server):
        url, _ = golden_server
        client = RewardClient(ClientConfig(endpoint=url))
        results = client.score(*golden_inputs())
        # The golden group chart-01 advantages sum to zero and the singleton
        # group scores advantage 0.
        assert results[3].advantage == 0.0
        assert abs(sum(r.advantage for r in results[:3])) <= 1e-9 * 3

    def test_mismatched_lengths_is_local_error(self, golden_server):
        url, state = golden_server
        client = RewardClient(ClientConfig(endpoint=url))
        with pytest.raises(ValueError):
            client.score(["a", "b"], [{}], ["p1", "p2"])
        assert state.calls == 0  # no wire call


class TestRetries:
    def test_exhaustion_after_exactly_retries_plus_one(self, failing_server):
        url, state = failing_server
        client = RewardClient(ClientConfig(endpoint=url, retries=2, backoff_base=0.0))
        completions, gts, pids = golden_inputs()
        with pytest.raises(RewardServiceError) as err:
            client.score(completions, gts, pids)
        assert state.calls == 3
        assert err.value.attempts == 3

    def test_zero_retries_single_attempt(self, failing_server):
        url, state = failing_server
        client = RewardClient(ClientConfig(endpoint=url, retries=0, backoff_base=0.0))
        with pytest.raises(RewardServiceError) as err:
            client.score(*golden_inputs())
        assert state.calls == 1
        assert err.value.attempts == 1

    def test_connection_refused_is_typed(self):
        client = RewardClient(
            ClientConfig(endpoint="http://127.0.0.1:9", retries=1, backoff_base=0.0)
        )
        with pytest.raises(RewardServiceError) as err:
            client.score(*golden_inputs())
        assert err.value.attempts == 2

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ClientConfig(endpoint="http://x", timeout=0)
        with pytest.raises(ValueError):
            ClientConfig(endpoint="http://x", retries=-1)


class TestRewardFnAdaptor:
    def test_returns_scalar_totals(self, golden_server):
        url, _ = golden_server
        fn = reward_fn(RewardClient(ClientConfig(endpoint=url)))
        totals = fn(*golden_inputs())
        assert totals == [it["breakdown"]["r_total"] for it in GOLDEN_RESPONSE["items"]]


@pytest.fixture(scope="module")
def live_service():
    """The real scoring service, reached only through its CLI and HTTP."""
    import socket
    import subprocess
    import sys
    import time

    import requests

    if subprocess.run(
        [sys.executable, "-c", "import chartreward"], capture_output=True
    ).returncode:
        pytest.skip("chartreward service package not installed")
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    proc = subprocess.Popen(
        [sys.executable, "-m", "chartreward.cli", "serve", "--port", str(port)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    url = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if requests.get(url + "/health", timeout=1).ok:
                    break
            except requests.RequestException:
                time.sleep(0.1)
        else:
            pytest.skip("service did not come up")
        yield url
    finally:
        proc.terminate()
        proc.wait(timeout=10)


class TestLiveService:
    def test_end_to_end_matches_golden(self, live_service):
        client = RewardClient(ClientConfig(endpoint=live_service))
        assert client.health()["status"] == "ok"
        results = client.score(*golden_inputs())
        for got, want in zip(results, GOLDEN_RESPONSE["items"]):
            assert got.breakdown == want["breakdown"]
            assert got.advantage == want["advantage"]
