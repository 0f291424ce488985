"""
Feature Extraction Pipeline

Turns the raw face and body tracks listed in the session manifests into
smoothed `*.feat.csv` feature files and writes matching feature manifests.
Files are processed in a thread pool capped by `settings.threads`; a track
that cannot be processed is skipped and its modality becomes unavailable
for that sentence.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from config.constants import AU_SUFFIX, FEATURE_SUFFIX, POSE_SUFFIX
from config.settings import settings
from data.extractors.expressivity import preprocess_track
from data.extractors.track_io import read_au_csv, read_pose_jsonl
from data.ingestion.manifests import SessionManifest
from utils.errors import MaleficError
from utils.stamping import Stamp, write_csv

logger = logging.getLogger(__name__)

TRACK_MODALITIES = ("face", "body")


@dataclass
class ExtractionJob:
    session_id: str
    sentence_id: str
    modality: str
    source: str
    target: str
    fps: float


class FeatureExtractor:
    """
    Extracts expressivity features for every track in a set of manifests.
    """

    def __init__(self, data_root: Union[str, Path], threads: Optional[int] = None, stamp: Stamp = None):
        """
        Initialize the extractor.

        Args:
            data_root: Directory all manifest paths are relative to
            threads: Worker threads (default: settings.threads)
            stamp: Run stamp written into every feature file
        """
        self.data_root = Path(data_root)
        self.threads = max(1, threads or settings.threads)
        self.stamp = stamp

    @staticmethod
    def feature_path(modality: str, sentence_id: str) -> str:
        return f"features/{modality}/{sentence_id}{FEATURE_SUFFIX}"

    def extract_file(self, source: Union[str, Path], target: Union[str, Path], fps: float = 25.0) -> Path:
        """
        Extract one track to a feature CSV.

        Raises:
            MaleficError: Propagated from reading or feature computation
        """
        source, target = Path(source), Path(target)
        if source.name.endswith(AU_SUFFIX):
            raw = read_au_csv(source)
        elif source.name.endswith(POSE_SUFFIX):
            raw = read_pose_jsonl(source, fps=fps)
        else:
            raise ValueError(f"Unrecognized track file: {source.name}")
        return write_csv(target, preprocess_track(raw), self.stamp)

    def _run_job(self, job: ExtractionJob) -> Tuple[ExtractionJob, bool]:
        try:
            self.extract_file(self.data_root / job.source, self.data_root / job.target, job.fps)
            return job, True
        except (MaleficError, ValueError, OSError) as e:
            logger.warning(f"Skipping {job.modality} track of {job.sentence_id}: {e}")
            return job, False

    def plan(self, manifests: Dict[str, SessionManifest]) -> List[ExtractionJob]:
        jobs = []
        for session_id, manifest in sorted(manifests.items()):
            for sentence_id, paths in sorted(manifest.sentences.items()):
                for modality in TRACK_MODALITIES:
                    if modality in paths:
                        jobs.append(ExtractionJob(
                            session_id=session_id,
                            sentence_id=sentence_id,
                            modality=modality,
                            source=paths[modality],
                            target=self.feature_path(modality, sentence_id),
                            fps=manifest.fps,
                        ))
        return jobs

    def run(self, manifests: Dict[str, SessionManifest]) -> Dict[str, SessionManifest]:
        """
        Extract every track and build the feature manifests.

        Returns:
            Feature manifests keyed by session; text and audio paths are
            carried over, face and body paths point at feature files
        """
        jobs = self.plan(manifests)
        logger.info(f"Extracting features for {len(jobs)} track(s) with {self.threads} thread(s)")
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            results = list(pool.map(self._run_job, jobs))

        features = {
            sid: SessionManifest(
                session_id=m.session_id,
                sentences={
                    sentence: {k: v for k, v in paths.items() if k not in TRACK_MODALITIES}
                    for sentence, paths in m.sentences.items()
                },
                modalities=list(m.modalities),
                fps=m.fps,
            )
            for sid, m in manifests.items()
        }
        failed = 0
        for job, ok in results:
            if ok:
                features[job.session_id].sentences[job.sentence_id][job.modality] = job.target
            else:
                failed += 1
        logger.info(f"Feature extraction done: {len(jobs) - failed} written, {failed} skipped")
        return features
