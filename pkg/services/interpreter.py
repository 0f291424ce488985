"""
Interpretation Service

Modality contributions of a trained fusion model, computed from eval-mode
selection maps:

- contribution profile: share of fusion dimensions drawn from each modality
- overall contribution: mean profile over samples
- dimension specialization: per-dimension selection frequencies
- clustering of profiles with k-means, elbow and silhouette
- projection bundle: docked, encoded and fused embeddings for external tools
"""

import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.cluster import KMeans
from sklearn.metrics import silhouette_score

from config.constants import CLUSTER_RESTARTS, LABEL_ORDER
from config.schemas import InterpretConfig
from core.classifier import BaseClassifier, MaleficClassifier
from core.fusion import FusionTrace
from data.ingestion.dataset import full_modality_samples, iter_batches
from models.dataset import Batch, MultimodalSample
from models.fusion import SelectionMap
from models.report import ClusterReport, SpecializationReport
from utils.errors import ClusteringError, InterpretationError
from utils.stamping import Stamp, write_csv, write_json

logger = logging.getLogger(__name__)


# ===== Contribution statistics =====

def _check_maps(maps: Sequence[SelectionMap]) -> Tuple[str, ...]:
    if len(maps) == 0:
        raise InterpretationError("No selection maps to interpret")
    modalities = tuple(m.value for m in maps[0].modalities)
    dim = maps[0].dim
    for selection in maps:
        if tuple(m.value for m in selection.modalities) != modalities or selection.dim != dim:
            raise InterpretationError(
                "Selection maps disagree on modalities or fusion dimension",
                sample_id=selection.sample_id,
            )
    return modalities


def contribution_profile(selection: SelectionMap) -> np.ndarray:
    """q[m] = (#dimensions choosing m) / c."""
    return selection.counts() / selection.dim


def contribution_profiles(maps: Sequence[SelectionMap]) -> np.ndarray:
    """(N, M) profiles; every row sums to 1."""
    _check_maps(maps)
    return np.stack([contribution_profile(s) for s in maps])


def overall_contribution(maps: Sequence[SelectionMap]) -> np.ndarray:
    """
    Mean contribution profile.

    Raises:
        InterpretationError: On empty input
    """
    return contribution_profiles(maps).mean(axis=0)


def dimension_specialization(maps: Sequence[SelectionMap]) -> SpecializationReport:
    """
    Per-dimension selection frequencies.

    Returns:
        SpecializationReport with (M, c) frequencies whose columns sum to 1;
        `specialized` marks frequency 1 and `dead` frequency 0

    Raises:
        InterpretationError: On empty input
    """
    modalities = _check_maps(maps)
    chosen = np.stack([s.chosen for s in maps])
    frequencies = np.stack([(chosen == m).mean(axis=0) for m in range(len(modalities))])
    return SpecializationReport(
        frequencies=frequencies,
        specialized=frequencies == 1.0,
        dead=frequencies == 0.0,
        modalities=list(modalities),
    )


def contribution_histograms(profiles: np.ndarray, modalities: Sequence[str], bins: int = 10) -> pd.DataFrame:
    """Histogram of each modality's share over [0, 1]."""
    rows = []
    for j, name in enumerate(modalities):
        counts, edges = np.histogram(profiles[:, j], bins=bins, range=(0.0, 1.0))
        for count, lo, hi in zip(counts, edges[:-1], edges[1:]):
            rows.append({"modality": name, "bin_lo": float(lo), "bin_hi": float(hi), "count": int(count)})
    return pd.DataFrame(rows, columns=["modality", "bin_lo", "bin_hi", "count"])


# ===== Clustering =====

def _fit_kmeans(
    profiles: np.ndarray,
    k: int,
    restarts: int,
    seed: int,
    previous: Optional[np.ndarray],
) -> KMeans:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        best = KMeans(n_clusters=k, init="k-means++", n_init=restarts, random_state=seed).fit(profiles)
        if previous is not None:
            # previous centers plus the point farthest from them
            distances = ((profiles[:, None, :] - previous[None, :, :]) ** 2).sum(axis=2).min(axis=1)
            init = np.vstack([previous, profiles[int(np.argmax(distances))]])
            warm = KMeans(n_clusters=k, init=init, n_init=1, random_state=seed).fit(profiles)
            if warm.inertia_ < best.inertia_:
                best = warm
    return best


def elbow_k(inertia: Dict[int, float], k_min: int, k_max: int) -> int:
    """
    k with the largest second difference I(k-1) - 2 I(k) + I(k+1).

    Candidates run from max(k_min, 2) to k_max - 1; ties go to the smallest
    k. Falls back to k_min when no candidate has both neighbors.
    """
    candidates = [k for k in range(max(k_min, 2), k_max) if k - 1 in inertia and k + 1 in inertia]
    if not candidates:
        return k_min
    curvature = [inertia[k - 1] - 2 * inertia[k] + inertia[k + 1] for k in candidates]
    return candidates[int(np.argmax(curvature))]


def silhouette(profiles: np.ndarray, assignments: np.ndarray) -> float:
    """Euclidean silhouette; 0 for a single cluster or all singletons."""
    n_clusters = np.unique(assignments).size
    if n_clusters < 2 or n_clusters >= len(profiles):
        return 0.0
    return float(silhouette_score(profiles, assignments, metric="euclidean"))


def cluster_contributions(
    profiles: np.ndarray,
    k_min: int = 2,
    k_max: int = 10,
    restarts: int = CLUSTER_RESTARTS,
    rng: Optional[np.random.Generator] = None,
    modalities: Optional[Sequence[str]] = None,
) -> ClusterReport:
    """
    Cluster contribution profiles.

    K-means (k-means++ seeding, `restarts` initializations, best inertia
    kept) runs for k = 1..k_max; the elbow of the inertia curve over
    [k_min, k_max] picks k and the silhouette is computed at that k.

    Args:
        profiles: (N, M) contribution profiles
        k_min: Smallest candidate k
        k_max: Largest candidate k
        restarts: Initializations per k
        rng: Generator for the k-means seeds
        modalities: Names used for `dominant_modality`

    Returns:
        ClusterReport; identical profiles give a degenerate report with k = 1
        and no elbow

    Raises:
        ClusteringError: If there are fewer profiles than k_max
    """
    profiles = np.asarray(profiles, dtype=np.float64)
    n = len(profiles)
    if k_min < 1 or k_max < k_min:
        raise ClusteringError(f"Invalid k range [{k_min}, {k_max}]", k_min=k_min, k_max=k_max)
    if n < k_max:
        raise ClusteringError(f"{n} profiles cannot form {k_max} clusters", n_samples=n, k_max=k_max)
    modalities = list(modalities) if modalities is not None else [str(j) for j in range(profiles.shape[1])]
    rng = rng if rng is not None else np.random.default_rng()

    if np.all(profiles == profiles[0]):
        logger.warning("All contribution profiles are identical; no elbow can be claimed")
        return ClusterReport(
            k=1,
            assignments=np.zeros(n, dtype=np.int64),
            centroids=profiles[:1].copy(),
            silhouette=0.0,
            inertia={k: 0.0 for k in range(1, k_max + 1)},
            degenerate=True,
            elbow=None,
            shares=[1.0],
            dominant_modality=[modalities[int(np.argmax(profiles[0]))]],
        )

    seed = int(rng.integers(2 ** 31 - 1))
    fits: Dict[int, KMeans] = {}
    previous = None
    for k in range(1, k_max + 1):
        fits[k] = _fit_kmeans(profiles, k, restarts, seed, previous)
        previous = fits[k].cluster_centers_
    inertia = {k: float(fit.inertia_) for k, fit in fits.items()}

    k = elbow_k(inertia, k_min, k_max)
    chosen = fits[k]
    assignments = chosen.labels_.astype(np.int64)
    shares = np.bincount(assignments, minlength=k) / n
    report = ClusterReport(
        k=k,
        assignments=assignments,
        centroids=chosen.cluster_centers_,
        silhouette=silhouette(profiles, assignments),
        inertia=inertia,
        elbow=k,
        shares=shares.tolist(),
        dominant_modality=[modalities[int(np.argmax(c))] for c in chosen.cluster_centers_],
    )
    logger.info(f"Contribution clustering: k={k}, silhouette={report.silhouette:.3f}")
    return report


# ===== Model passes =====

def _require_fusion(model: BaseClassifier) -> MaleficClassifier:
    if not isinstance(model, MaleficClassifier):
        raise InterpretationError(
            f"Contribution analysis needs a fusion model, got '{model.config.kind}'",
            kind=model.config.kind,
        )
    return model


def selection_traces(
    model: BaseClassifier,
    samples: Sequence[MultimodalSample],
    batch_size: int = 64,
) -> List[Tuple[List[MultimodalSample], FusionTrace]]:
    """Eval-mode fusion traces, batch by batch."""
    model = _require_fusion(model)
    samples = list(samples)
    return [
        (samples[start:start + batch_size], model.predict(batch))
        for start, batch in zip(range(0, len(samples), batch_size), iter_batches(samples, batch_size))
    ]


def selection_maps(
    model: BaseClassifier,
    samples: Sequence[MultimodalSample],
    batch_size: int = 64,
) -> List[SelectionMap]:
    maps: List[SelectionMap] = []
    for _, trace in selection_traces(model, samples, batch_size):
        maps.extend(trace.selection_maps())
    return maps


def export_embeddings(
    samples: Sequence[MultimodalSample],
    model: BaseClassifier,
    directory: Union[str, Path],
    batch_size: int = 64,
    stamp: Stamp = None,
) -> Path:
    """
    Write the projection bundle.

    Files:
        encoded_<modality>.npy   (N, encoder output dim)
        docked_<modality>.npy    (N, c), zero rows where unavailable
        fused.npy                (N, c)
        mask.npy                 (N, M)
        modality_predictions.npy (N, M, 3) head applied to each docked row
        samples.csv              sentence id, label, prediction, probabilities
        selections.jsonl         one SelectionMap per line
        manifest.json            file list, shapes, modalities, labels

    Returns:
        Path of manifest.json
    """
    model = _require_fusion(model)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = [m.value for m in model.modalities]
    encoded: Dict[str, List[np.ndarray]] = {name: [] for name in names}
    docked, fused, masks, modality_logits, rows, maps = [], [], [], [], [], []

    for chunk, trace in selection_traces(model, samples, batch_size):
        batch_mask = trace.mask
        outputs = model.encode(Batch.from_samples(chunk))
        for j, name in enumerate(names):
            encoded[name].append(np.where(batch_mask[:, j:j + 1], outputs[name].data, 0.0))
        docked.append(trace.docked.data)
        fused.append(trace.fused.data)
        masks.append(batch_mask)
        modality_logits.append(trace.modality_logits)
        probabilities = _softmax(trace.logits.data)
        for sample, p in zip(chunk, probabilities):
            rows.append({
                "sentence_id": sample.sentence_id,
                "label": LABEL_ORDER[sample.label],
                "prediction": LABEL_ORDER[int(np.argmax(p))],
                **{f"p_{name}": float(v) for name, v in zip(LABEL_ORDER, p)},
            })
        maps.extend(trace.selection_maps())

    if not rows:
        raise InterpretationError("No samples to export")
    docked_all = np.concatenate(docked)
    files = {}
    for j, name in enumerate(names):
        files[f"encoded_{name}.npy"] = np.concatenate(encoded[name])
        files[f"docked_{name}.npy"] = docked_all[:, j, :]
    files["fused.npy"] = np.concatenate(fused)
    files["mask.npy"] = np.concatenate(masks)
    files["modality_predictions.npy"] = np.concatenate(modality_logits)
    for filename, array in files.items():
        np.save(directory / filename, np.ascontiguousarray(array))
    write_csv(directory / "samples.csv", pd.DataFrame(rows), stamp)
    with open(directory / "selections.jsonl", "w", encoding="utf-8") as f:
        for selection in maps:
            f.write(json.dumps(selection.to_dict(), sort_keys=True) + "\n")

    manifest = {
        "n_samples": len(rows),
        "modalities": names,
        "labels": list(LABEL_ORDER),
        "fusion_dim": model.config.fusion_dim,
        "files": {name: list(array.shape) for name, array in sorted(files.items())},
        "tables": ["samples.csv", "selections.jsonl"],
    }
    path = write_json(directory / "manifest.json", manifest, stamp)
    logger.info(f"Exported projection bundle for {len(rows)} samples to {directory}")
    return path


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# ===== Service =====

@dataclass
class InterpretResult:
    overall: Dict[str, float]
    specialization: SpecializationReport
    clusters: Optional[ClusterReport]
    profiles: np.ndarray
    sample_ids: List[str]
    output_dir: Optional[Path] = None


class Interpreter:
    """
    Runs the contribution analysis on the samples where every model
    modality is available.
    """

    def __init__(self, config: Optional[InterpretConfig] = None, batch_size: int = 64):
        self.config = config or InterpretConfig()
        self.batch_size = batch_size

    def interpret(
        self,
        model: BaseClassifier,
        samples: Sequence[MultimodalSample],
        rng: np.random.Generator,
        output_dir: Optional[Union[str, Path]] = None,
        stamp: Stamp = None,
    ) -> InterpretResult:
        """
        Compute and optionally write all interpretation artifacts.

        Writes contributions.csv, overall.json, specialization.csv,
        contribution_histograms.csv, clusters.json and projection/.

        Raises:
            InterpretationError: If no sample has every model modality
        """
        model = _require_fusion(model)
        full = full_modality_samples(samples, model.modalities)
        if not full:
            raise InterpretationError(
                "No sample has every model modality available",
                modalities=[m.value for m in model.modalities],
            )
        names = [m.value for m in model.modalities]
        maps = selection_maps(model, full, self.batch_size)
        profiles = contribution_profiles(maps)
        overall = dict(zip(names, overall_contribution(maps).tolist()))
        specialization = dimension_specialization(maps)
        clusters = self._cluster(profiles, names, rng)
        logger.info(
            "Overall contribution: " + ", ".join(f"{name} {share:.2f}" for name, share in overall.items())
        )

        result = InterpretResult(
            overall=overall,
            specialization=specialization,
            clusters=clusters,
            profiles=profiles,
            sample_ids=[s.sentence_id for s in full],
        )
        if output_dir is not None:
            result.output_dir = self.write(result, full, model, Path(output_dir), stamp)
        return result

    def _cluster(self, profiles: np.ndarray, names: List[str], rng: np.random.Generator) -> Optional[ClusterReport]:
        cfg = self.config
        k_max = min(cfg.k_max, len(profiles))
        if k_max < max(cfg.k_min, 2):
            logger.warning(f"Only {len(profiles)} full-modality samples; skipping clustering")
            return None
        if k_max < cfg.k_max:
            logger.warning(f"Clamping k_max from {cfg.k_max} to {k_max} ({len(profiles)} samples)")
        return cluster_contributions(profiles, cfg.k_min, k_max, cfg.restarts, rng, names)

    def write(
        self,
        result: InterpretResult,
        samples: Sequence[MultimodalSample],
        model: MaleficClassifier,
        directory: Path,
        stamp: Stamp = None,
    ) -> Path:
        names = result.specialization.modalities
        contributions = pd.DataFrame(result.profiles, columns=names)
        contributions.insert(0, "sentence_id", result.sample_ids)
        contributions["cluster"] = result.clusters.assignments if result.clusters else -1
        write_csv(directory / "contributions.csv", contributions, stamp)

        specialization = pd.DataFrame(
            result.specialization.frequencies,
            columns=[f"d{d}" for d in range(result.specialization.frequencies.shape[1])],
        )
        specialization.insert(0, "modality", names)
        write_csv(directory / "specialization.csv", specialization, stamp)

        write_json(directory / "overall.json", {
            "overall": result.overall,
            "n_samples": len(result.sample_ids),
            "specialized": [list(p) for p in result.specialization.flagged("specialized")],
            "dead": [list(p) for p in result.specialization.flagged("dead")],
        }, stamp)
        write_csv(
            directory / "contribution_histograms.csv",
            contribution_histograms(result.profiles, names, self.config.histogram_bins),
            stamp,
        )
        clusters = result.clusters.to_dict() if result.clusters else {"skipped": True}
        write_json(directory / "clusters.json", clusters, stamp)
        export_embeddings(samples, model, directory / "projection", self.batch_size, stamp)
        logger.info(f"Wrote interpretation artifacts to {directory}")
        return directory
