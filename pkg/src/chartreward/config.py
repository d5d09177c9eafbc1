"""Reward configuration: every tunable constant in one immutable record.

Config files are flat key/value text (``key = value`` per line, ``#``
comments); a JSON object with the same keys is accepted too.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields, replace

STRICT = "strict"
WARM_START = "warm_start"


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


@dataclass(frozen=True)
class RewardConfig:
    tau: float = 0.05
    eta1: int = 150
    eta2: int = 400
    warmup_len_threshold: int = 100
    warmup_len_reward: float = 0.5
    filler_run_limit: int = 5
    m: int = 3
    lambda1: float = 0.5
    lambda2: float = 1.0
    alpha: float = 1.0
    table_bonus_mode: str = STRICT
    parse_bonus: float = 0.5
    keys_bonus: float = 0.5
    token_policy: str = "whitespace"

    def __post_init__(self) -> None:
        if not (0 < self.eta1 <= self.eta2):
            raise ConfigError(f"need 0 < eta1 <= eta2, got {self.eta1}, {self.eta2}")
        if self.tau <= 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ConfigError("lambda1 and lambda2 must be > 0")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.table_bonus_mode not in (STRICT, WARM_START):
            raise ConfigError(f"table_bonus_mode must be strict or warm_start, got {self.table_bonus_mode!r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def with_overrides(self, overrides: dict) -> "RewardConfig":
        return replace(self, **_coerce_fields(overrides))


def _coerce_fields(raw: dict) -> dict:
    """Coerce string/JSON values onto the declared field types."""
    types = {f.name: f.type for f in fields(RewardConfig)}
    out = {}
    for key, value in raw.items():
        if key not in types:
            raise ConfigError(f"unknown config key: {key!r}")
        ftype = types[key]
        try:
            if isinstance(value, str) and ftype in ("int", "float"):
                value = float(value) if ftype == "float" else int(value)
            elif ftype == "float" and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
        out[key] = value
    return out


def load_config(path: str) -> RewardConfig:
    """Load a config file; missing keys keep their defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object")
        return RewardConfig(**_coerce_fields(raw))
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    return RewardConfig(**_coerce_fields(raw))
