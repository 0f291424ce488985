"""
Named Presets

Training presets reproduce the published single- and multi-modality
schedules. Run presets bundle a corpus, a training schedule and model sizes
for the CLI's --preset flag.
"""

from typing import Any, Dict, List

TRAINING_PRESETS: Dict[str, Dict[str, Any]] = {
    "multimodal-150": {"epochs": 150, "max_lr": 2e-4, "scheduler": "cosine", "model_kind": "malefic"},
    "text-150": {
        "epochs": 150, "max_lr": 2e-4, "scheduler": "cosine",
        "model_kind": "unimodal", "modalities": ["text"],
    },
    "text-context-25": {
        "epochs": 25, "max_lr": 2e-5, "scheduler": "constant",
        "model_kind": "concat", "modalities": ["text", "client_context", "therapist_context"],
    },
    "audio-25": {
        "epochs": 25, "max_lr": 1e-5, "scheduler": "constant",
        "model_kind": "unimodal", "modalities": ["audio"],
    },
    "face-150": {
        "epochs": 150, "max_lr": 1e-4, "scheduler": "one_cycle",
        "model_kind": "unimodal", "modalities": ["face"],
    },
    "body-1500": {
        "epochs": 1500, "max_lr": 5e-5, "scheduler": "constant",
        "model_kind": "unimodal", "modalities": ["body"],
    },
}

RUN_PRESETS: Dict[str, Dict[str, Any]] = {
    "tiny": {
        "corpus": {
            "n_sessions": 10,
            "client_turns_per_session": 8,
            "max_sentences_per_turn": 2,
            "text_dim": 32,
            "audio_dim": 48,
            "face_frames": [16, 32],
            "body_frames": [24, 40],
        },
        "train": {
            "epochs": 12,
            "max_lr": 5e-3,
            "scheduler": "cosine",
            "batch_size": 16,
            "fusion_dim": 64,
            "encoder_output": {"face": 32, "body": 8},
        },
        "evaluation": {"bootstrap_samples": 200},
        "interpret": {"k_min": 2, "k_max": 6, "restarts": 5},
    },
    "paper-shapes": {
        "corpus": {
            "n_sessions": 40,
            "client_turns_per_session": 12,
            "max_sentences_per_turn": 3,
            "text_dim": 768,
            "audio_dim": 758,
            "face_frames": [50, 150],
            "body_frames": [50, 150],
        },
        "train": {**TRAINING_PRESETS["multimodal-150"], "batch_size": 32, "fusion_dim": 64},
        "evaluation": {"bootstrap_samples": 1000},
        "interpret": {"k_min": 2, "k_max": 10, "restarts": 20},
    },
}


# Alternative names accepted wherever a run preset is named
PRESET_ALIASES: Dict[str, str] = {"reference-shapes": "paper-shapes"}


def preset_names() -> List[str]:
    return sorted([*RUN_PRESETS, *PRESET_ALIASES])


def run_preset(name: str) -> Dict[str, Any]:
    """Deep copy of a run preset."""
    name = PRESET_ALIASES.get(name, name)
    if name not in RUN_PRESETS:
        raise KeyError(f"Unknown preset '{name}'; expected one of {sorted(RUN_PRESETS)}")
    return deep_merge({}, RUN_PRESETS[name])


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge `override` into a copy of `base`."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        elif isinstance(value, dict):
            merged[key] = deep_merge({}, value)
        else:
            merged[key] = value
    return merged
