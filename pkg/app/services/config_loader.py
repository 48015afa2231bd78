"""Experiment configuration loading: preset, then TOML file, then CLI overrides."""

import tomllib
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app.core.exceptions import ConfigError
from app.schemas.experiment import ExperimentConfig, Scale


def _merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(
    path: Path | None = None,
    scale: Scale | str | None = None,
    overrides: dict[str, Any] | None = None,
    defaults: dict[str, Any] | None = None,
) -> ExperimentConfig:
    """Build a validated config.

    Layers, lowest first: preset, ``defaults``, the TOML file, ``overrides``.
    A ``scale`` key in the file picks the preset when ``scale`` is not given.
    ``None`` overrides are ignored. Any problem raises ``ConfigError``.
    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with Path(path).open("rb") as handle:
                data = tomllib.load(handle)
        except OSError as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Malformed config {path}: {e}") from e

    preset = scale if scale is not None else data.pop("scale", Scale.FULL)
    data.pop("scale", None)
    try:
        base = ExperimentConfig.for_scale(Scale(preset)).model_dump(mode="json")
        base = _merge(base, defaults or {})
        merged = _merge(base, data)
        merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return ExperimentConfig.model_validate(merged)
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"Invalid experiment config: {e}") from e
