"""Runtime configuration.

Sources in rising precedence: built-in defaults, a key=value config file
(path from --config or CYRI_CONFIG), environment variables (CYRI_SB_KEY,
CYRI_ABUSE_KEY), then command-line flags. The file format is flat
key = value lines with # comments; booleans are true/false.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from typing import Optional

from .errors import BadConfig

ENV_CONFIG = "CYRI_CONFIG"
ENV_SB_KEY = "CYRI_SB_KEY"
ENV_ABUSE_KEY = "CYRI_ABUSE_KEY"


@dataclass(frozen=True)
class Config:
    # storage
    data_dir: str = "data"
    timezone: str = "local"  # IANA name, or "local" for the system zone

    # api service
    host: str = "127.0.0.1"
    port: int = 8137
    allow_nonlocal: bool = False

    # model backend
    gateway_mode: str = "live"  # live | replay
    model_base_url: str = "http://127.0.0.1:8080/v1"
    model_name: str = "llama-3.1-8b-instruct"
    model_api_key: str = ""
    model_timeout_secs: float = 120.0
    model_max_tokens: int = 2048
    queue_depth: int = 8
    replay_dir: str = ""

    # threat intel
    intel_mode: str = "stub"  # live | replay | stub
    sb_key: str = ""
    abuse_key: str = ""
    intel_replay_path: str = ""
    intel_denylist: str = ""  # comma-separated domains for stub mode
    intel_cache_ttl_secs: float = 3600.0

    # ingestion
    contacts_path: str = ""
    watch_dir: str = ""
    poll_interval_secs: float = 5.0

    # parsing and scoring policy
    tolerant_parse: bool = True
    intensity_percent_coeff: float = 0.5
    intensity_feature_coeff: float = 0.5
    eval_bin_high: float = 0.8
    eval_bin_medium: float = 0.5
    prompt_char_budget: int = 100_000

    def denylist(self) -> tuple[str, ...]:
        return tuple(d.strip() for d in self.intel_denylist.split(",") if d.strip())

    def tzinfo(self):
        if self.timezone == "local":
            return None
        from zoneinfo import ZoneInfo
        try:
            return ZoneInfo(self.timezone)
        except Exception as exc:
            raise BadConfig(f"unknown timezone {self.timezone!r}") from exc


_FIELD_TYPES = {f.name: f.type for f in fields(Config)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    value = raw.strip()
    if kind == "bool":
        lowered = value.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise BadConfig(f"{key}: expected true/false, got {raw!r}")
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError as exc:
        raise BadConfig(f"{key}: {exc}") from exc
    # strings keep surrounding quotes off
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
        value = value[1:-1]
    return value


def parse_config_file(text: str) -> dict:
    """Flat key = value document; unknown keys are an error."""
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise BadConfig(f"line {line_no}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise BadConfig(f"line {line_no}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(path: Optional[str] = None, env: Optional[dict] = None,
                overrides: Optional[dict] = None) -> Config:
    """Defaults < config file < environment < explicit overrides (flags)."""
    env = os.environ if env is None else env
    config = Config()

    path = path or env.get(ENV_CONFIG)
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise BadConfig(f"cannot read config {path!r}: {exc}") from exc
        config = replace(config, **parse_config_file(text))

    env_values = {}
    if env.get(ENV_SB_KEY):
        env_values["sb_key"] = env[ENV_SB_KEY]
    if env.get(ENV_ABUSE_KEY):
        env_values["abuse_key"] = env[ENV_ABUSE_KEY]
    if env_values:
        config = replace(config, **env_values)

    if overrides:
        unknown = set(overrides) - set(_FIELD_TYPES)
        if unknown:
            raise BadConfig(f"unknown config overrides: {sorted(unknown)}")
        config = replace(config, **overrides)
    return config
