"""
Modality Manifests

One JSON manifest per session maps sentence ids to their per-modality
files, with paths relative to the data directory:

    {"session_id": "s000", "fps": 25.0, "modalities": ["text", "audio", ...],
     "sentences": {"s000-0001": {"text": "embeddings/text/s000-0001.emb.f32", ...}}}

Raw manifests (written with the corpus) point at raw tracks; feature
manifests (written by the feature step) point at `*.feat.csv` files.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union

from utils.stamping import Stamp, write_json

logger = logging.getLogger(__name__)


@dataclass
class SessionManifest:
    session_id: str
    sentences: Dict[str, Dict[str, str]] = field(default_factory=dict)
    modalities: List[str] = field(default_factory=list)
    fps: float = 25.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "session_id": self.session_id,
            "fps": self.fps,
            "modalities": list(self.modalities),
            "sentences": {sid: dict(sorted(paths.items())) for sid, paths in sorted(self.sentences.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SessionManifest":
        return cls(
            session_id=data["session_id"],
            sentences={sid: dict(paths) for sid, paths in data.get("sentences", {}).items()},
            modalities=list(data.get("modalities", [])),
            fps=float(data.get("fps", 25.0)),
        )

    def save(self, directory: Union[str, Path], stamp: Stamp = None) -> Path:
        return write_json(Path(directory) / f"{self.session_id}.json", self.to_dict(), stamp)


def load_manifests(directory: Union[str, Path]) -> Dict[str, SessionManifest]:
    """Every `*.json` manifest in a directory, keyed by session id."""
    directory = Path(directory)
    manifests = {}
    for path in sorted(directory.glob("*.json")):
        manifest = SessionManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
        manifests[manifest.session_id] = manifest
    logger.debug(f"Loaded {len(manifests)} manifest(s) from {directory}")
    return manifests


def flatten(manifests: Dict[str, SessionManifest]) -> Dict[str, Dict[str, str]]:
    """sentence id -> {modality: path} across sessions."""
    flat: Dict[str, Dict[str, str]] = {}
    for manifest in manifests.values():
        flat.update(manifest.sentences)
    return flat


def declared_modalities(manifests: Dict[str, SessionManifest]) -> List[str]:
    names = set()
    for manifest in manifests.values():
        names.update(manifest.modalities)
    return sorted(names)
