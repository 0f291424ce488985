"""
Run Configuration Loader

Builds the effective PipelineConfig from three layers, lowest first:
preset defaults, command-line flags, then a TOML config file.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from pydantic import ValidationError

from config.presets import PRESET_ALIASES, TRAINING_PRESETS, deep_merge, run_preset
from config.schemas import PipelineConfig, TrainConfig
from config.settings import settings
from utils.errors import ParameterError

logger = logging.getLogger(__name__)

SECTIONS = ("corpus", "train", "evaluation", "interpret")
TOP_LEVEL = ("preset", "seed", "modalities")


def read_toml(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a TOML config file.

    Keys outside the known sections that name TrainConfig fields are
    accepted at the top level (a plain `train.toml`). A `train.preset` key
    expands to one of the training presets.

    Raises:
        ParameterError: If the file is missing, unreadable or has unknown keys
    """
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"Config file not found: {path}", path=str(path))
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ParameterError(f"Invalid TOML in {path}: {e}", path=str(path)) from e

    layer: Dict[str, Any] = {}
    train_fields = set(TrainConfig.model_fields) | {"preset"}
    unknown = []
    for key, value in raw.items():
        if key in SECTIONS:
            layer[key] = deep_merge(layer.get(key, {}), value)
        elif key in TOP_LEVEL:
            layer[key] = value
        elif key in train_fields:
            layer.setdefault("train", {})[key] = value
        else:
            unknown.append(key)
    if unknown:
        raise ParameterError(f"Unknown config keys in {path}: {sorted(unknown)}", keys=sorted(unknown))

    train = layer.get("train", {})
    if "preset" in train:
        name = train.pop("preset")
        if name not in TRAINING_PRESETS:
            raise ParameterError(
                f"Unknown training preset '{name}'; expected one of {sorted(TRAINING_PRESETS)}",
                preset=name,
            )
        layer["train"] = deep_merge(TRAINING_PRESETS[name], train)
    return layer


def load_config(
    preset: Optional[str] = None,
    seed: Optional[int] = None,
    modalities: Optional[Iterable[str]] = None,
    config_path: Optional[Union[str, Path]] = None,
) -> PipelineConfig:
    """
    Resolve the effective run configuration.

    Args:
        preset: Run preset name (defaults to settings.default_preset)
        seed: Run seed from the command line
        modalities: Modality subset from the command line
        config_path: Optional TOML file; its values win over the flags

    Returns:
        Validated PipelineConfig

    Raises:
        ParameterError: On unknown presets, bad files or invalid values
    """
    file_layer = read_toml(config_path) if config_path else {}
    name = file_layer.get("preset") or preset or settings.default_preset
    name = PRESET_ALIASES.get(name, name)
    try:
        merged = run_preset(name)
    except KeyError as e:
        raise ParameterError(str(e.args[0]), preset=name) from e
    merged["preset"] = name
    merged["seed"] = settings.default_seed

    flags: Dict[str, Any] = {}
    if seed is not None:
        flags["seed"] = seed
    if modalities:
        flags["modalities"] = list(modalities)
    merged = deep_merge(deep_merge(merged, flags), file_layer)

    merged.setdefault("train", {})["seed"] = merged["seed"]
    if merged.get("modalities"):
        merged["train"]["modalities"] = merged["modalities"]
    try:
        config = PipelineConfig.model_validate(merged)
    except (ValidationError, ValueError) as e:
        raise ParameterError(f"Invalid configuration: {e}") from e
    logger.debug(f"Resolved configuration for preset '{name}' with seed {config.seed}")
    return config
