"""HTTP reward service: POST /score and GET /health.

Responses are serialized with a fixed key order and full-precision floats
(shortest round-trip repr), so replaying an identical request yields
byte-identical bytes under the deterministic provider.

Environment overrides use the REWARD_ prefix: REWARD_PORT, REWARD_CONFIG,
REWARD_PROVIDER, REWARD_EMBED_ENDPOINT, REWARD_EMBED_TIMEOUT,
REWARD_EMBED_RETRIES, plus REWARD_<CONFIGKEY> for any RewardConfig key
(e.g. REWARD_TAU=0.1).
"""

from __future__ import annotations

import json
import os

from fastapi import FastAPI, Request, Response

from . import __version__
from .config import ConfigError, RewardConfig, load_config
from .conformity import (
    EmbeddingProvider,
    HashedTrigramProvider,
    RemoteEmbeddingProvider,
    RewardUnavailable,
)
from .scoring import ProtocolError, ScoreItem, ground_truth_from_dict, score_batch_items

ENV_PREFIX = "REWARD_"


def _error_response(status: int, code: str, field: str, message: str) -> Response:
    body = {"error": {"code": code, "field": field, "message": message}}
    return Response(
        content=json.dumps(body, ensure_ascii=False, separators=(",", ":")),
        status_code=status,
        media_type="application/json",
    )


def parse_score_request(payload: object) -> tuple[list[ScoreItem], dict]:
    """Validate the wire request; raises ProtocolError with a field path."""
    if not isinstance(payload, dict):
        raise ProtocolError("BAD_REQUEST", "", "request body must be a JSON object")
    raw_items = payload.get("items")
    if raw_items is None:
        raise ProtocolError("MISSING_FIELD", "items", "missing items")
    if not isinstance(raw_items, list):
        raise ProtocolError("BAD_REQUEST", "items", "items must be a list")
    if not raw_items:
        raise ProtocolError("EMPTY_BATCH", "items", "items must be non-empty")
    items: list[ScoreItem] = []
    for i, raw in enumerate(raw_items):
        where = f"items[{i}]"
        if not isinstance(raw, dict):
            raise ProtocolError("BAD_REQUEST", where, "item must be an object")
        for key in ("prompt_id", "completion", "ground_truth"):
            if key not in raw:
                raise ProtocolError("MISSING_FIELD", f"{where}.{key}", f"missing {key}")
        if not isinstance(raw["completion"], str) or not raw["completion"]:
            raise ProtocolError(
                "EMPTY_COMPLETION", f"{where}.completion", "completion must be a non-empty string"
            )
        gt = ground_truth_from_dict(raw["ground_truth"], f"{where}.ground_truth")
        items.append(ScoreItem(str(raw["prompt_id"]), raw["completion"], gt))
    overrides = payload.get("config_overrides") or {}
    if not isinstance(overrides, dict):
        raise ProtocolError(
            "BAD_REQUEST", "config_overrides", "config_overrides must be an object"
        )
    return items, overrides


def create_app(cfg: RewardConfig, provider: EmbeddingProvider) -> FastAPI:
    app = FastAPI(title="chartreward", version=__version__)

    @app.post("/score")
    async def score(request: Request) -> Response:
        try:
            payload = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _error_response(400, "BAD_JSON", "", f"request body is not JSON: {exc}")
        try:
            items, overrides = parse_score_request(payload)
            effective = cfg.with_overrides(overrides) if overrides else cfg
        except ProtocolError as exc:
            return _error_response(400, exc.code, exc.field, str(exc))
        except ConfigError as exc:
            return _error_response(400, "BAD_CONFIG", "config_overrides", str(exc))
        try:
            result = score_batch_items(items, effective, provider)
        except ProtocolError as exc:
            return _error_response(400, exc.code, exc.field, str(exc))
        except RewardUnavailable as exc:
            return _error_response(503, "EMBEDDING_UNAVAILABLE", "", str(exc))
        return Response(
            content=json.dumps(result, ensure_ascii=False, separators=(",", ":")),
            media_type="application/json",
        )

    @app.get("/health")
    async def health() -> Response:
        status = "ok"
        info: dict = {
            "status": status,
            "version": __version__,
            "config_hash": cfg.config_hash(),
            "provider": provider.kind,
        }
        if isinstance(provider, RemoteEmbeddingProvider):
            info["endpoint"] = provider.endpoint
            if not provider.reachable():
                info["status"] = "degraded"
        return Response(
            content=json.dumps(info, ensure_ascii=False, separators=(",", ":")),
            media_type="application/json",
        )

    return app


def build_provider(
    kind: str, endpoint: str | None = None, timeout: float = 10.0, retries: int = 2
) -> EmbeddingProvider:
    if kind == "fallback":
        return HashedTrigramProvider()
    if kind == "remote":
        if not endpoint:
            raise ConfigError("remote provider needs --embed-endpoint")
        return RemoteEmbeddingProvider(endpoint=endpoint, timeout=timeout, retries=retries)
    raise ConfigError(f"unknown provider kind: {kind!r}")


def service_settings_from_env(args: dict) -> dict:
    """Overlay REWARD_-prefixed environment variables onto CLI settings."""
    settings = dict(args)
    env_map = {
        "port": ("REWARD_PORT", int),
        "config": ("REWARD_CONFIG", str),
        "provider": ("REWARD_PROVIDER", str),
        "embed_endpoint": ("REWARD_EMBED_ENDPOINT", str),
        "embed_timeout": ("REWARD_EMBED_TIMEOUT", float),
        "embed_retries": ("REWARD_EMBED_RETRIES", int),
    }
    for key, (var, cast) in env_map.items():
        if var in os.environ:
            settings[key] = cast(os.environ[var])
    return settings


def config_from_env(base: RewardConfig) -> RewardConfig:
    """Apply REWARD_<KEY> overrides for RewardConfig fields."""
    overrides = {}
    for field_name in base.to_dict():
        var = ENV_PREFIX + field_name.upper()
        if var in os.environ:
            overrides[field_name] = os.environ[var]
    return base.with_overrides(overrides) if overrides else base


def load_service_config(path: str | None) -> RewardConfig:
    cfg = load_config(path) if path else RewardConfig()
    return config_from_env(cfg)
