"""Line-based application configuration: "key = value" pairs with '#'
comments. HAPTICVLM_CONFIG overrides the config path, and HAPTICVLM_VLM_URL
forces the remote VLM backend regardless of the file.

Every referenced input path must exist at load time; failures name the
offending key so startup errors are actionable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

CONFIG_ENV = "HAPTICVLM_CONFIG"
VLM_URL_ENV = "HAPTICVLM_VLM_URL"


class ConfigError(ValueError):
    """Invalid, unknown, or unsatisfiable configuration."""


@dataclass
class AppConfig:
    database_path: str | None = None
    registry_path: str | None = None
    encoder_backend: str = "fixture"  # fixture | url
    encoder_fixture_file: str | None = None
    encoder_url: str | None = None
    encoder_timeout_s: float = 5.0
    vlm_backend: str = "fixture"  # fixture | url
    vlm_fixture_file: str | None = None
    vlm_url: str | None = None
    vlm_timeout_ms: int = 10000
    match_threshold: float = 0.0
    smoothing_window: int = 5
    smoothing_min_agreement: int = 3
    thermal_hot_target_c: float = 40.0
    thermal_cold_target_c: float = 15.0
    thermal_ambient_c: float = 25.0
    thermal_tau_drive_s: float = 2.0
    thermal_tau_idle_s: float = 10.0
    thermal_clamp_min_c: float = 0.0
    thermal_clamp_max_c: float = 60.0
    thermal_cold_below_c: float = 18.0
    thermal_hot_above_c: float = 27.0
    server_host: str = "127.0.0.1"
    server_port: int = 8765
    log_dir: str | None = None


# config-file key -> (dataclass field, parser)
_KEY_MAP = {
    "database.path": ("database_path", str),
    "registry.path": ("registry_path", str),
    "encoder.backend": ("encoder_backend", str),
    "encoder.fixture_file": ("encoder_fixture_file", str),
    "encoder.url": ("encoder_url", str),
    "encoder.timeout_s": ("encoder_timeout_s", float),
    "vlm.backend": ("vlm_backend", str),
    "vlm.fixture_file": ("vlm_fixture_file", str),
    "vlm.url": ("vlm_url", str),
    "vlm.timeout_ms": ("vlm_timeout_ms", int),
    "match.threshold": ("match_threshold", float),
    "smoothing.window": ("smoothing_window", int),
    "smoothing.min_agreement": ("smoothing_min_agreement", int),
    "thermal.hot_target_c": ("thermal_hot_target_c", float),
    "thermal.cold_target_c": ("thermal_cold_target_c", float),
    "thermal.ambient_c": ("thermal_ambient_c", float),
    "thermal.tau_drive_s": ("thermal_tau_drive_s", float),
    "thermal.tau_idle_s": ("thermal_tau_idle_s", float),
    "thermal.clamp_min_c": ("thermal_clamp_min_c", float),
    "thermal.clamp_max_c": ("thermal_clamp_max_c", float),
    "thermal.cold_below_c": ("thermal_cold_below_c", float),
    "thermal.hot_above_c": ("thermal_hot_above_c", float),
    "server.host": ("server_host", str),
    "server.port": ("server_port", int),
    "log.dir": ("log_dir", str),
}


def parse_config(lines, source: str = "<config>") -> AppConfig:
    config = AppConfig()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = key.strip(), value.strip()
        if key not in _KEY_MAP:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        attr, parser = _KEY_MAP[key]
        try:
            setattr(config, attr, parser(value))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return config


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load and validate a config file; with no path, HAPTICVLM_CONFIG names
    the file, and with neither, defaults apply (fixture-free, no database)."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if path is None:
        config = AppConfig()
    else:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        config = parse_config(path.read_text(encoding="utf-8").splitlines(), source=str(path))
    if os.environ.get(VLM_URL_ENV):
        config.vlm_backend = "url"
        config.vlm_url = os.environ[VLM_URL_ENV]
    validate_config(config)
    return config


def _require_file(config_key: str, value: str | None) -> None:
    if value is not None and not Path(value).is_file():
        raise ConfigError(f"{config_key}: file does not exist: {value}")


def validate_config(config: AppConfig) -> None:
    if config.encoder_backend not in ("fixture", "url"):
        raise ConfigError(f"encoder.backend must be 'fixture' or 'url', got {config.encoder_backend!r}")
    if config.vlm_backend not in ("fixture", "url"):
        raise ConfigError(f"vlm.backend must be 'fixture' or 'url', got {config.vlm_backend!r}")
    _require_file("database.path", config.database_path)
    _require_file("registry.path", config.registry_path)
    _require_file("encoder.fixture_file", config.encoder_fixture_file)
    _require_file("vlm.fixture_file", config.vlm_fixture_file)
    if config.encoder_backend == "url" and not config.encoder_url:
        raise ConfigError("encoder.backend = url requires encoder.url")
    if config.vlm_backend == "url" and not config.vlm_url:
        raise ConfigError("vlm.backend = url requires vlm.url")
    if not (-1.0 <= config.match_threshold <= 1.0):
        raise ConfigError(f"match.threshold must be in [-1, 1], got {config.match_threshold}")
    if config.smoothing_window < 1 or not (1 <= config.smoothing_min_agreement <= config.smoothing_window):
        raise ConfigError(
            f"smoothing.min_agreement must be in [1, smoothing.window], got "
            f"{config.smoothing_min_agreement}/{config.smoothing_window}"
        )
    if config.vlm_timeout_ms <= 0:
        raise ConfigError(f"vlm.timeout_ms must be positive, got {config.vlm_timeout_ms}")
    if config.log_dir is not None:
        parent = Path(config.log_dir).parent
        if not parent.is_dir():
            raise ConfigError(f"log.dir: parent directory does not exist: {parent}")
        Path(config.log_dir).mkdir(exist_ok=True)
