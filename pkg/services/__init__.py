"""Services module for the MALEFIC classifier"""

from .evaluator import Evaluator, evaluate, f1_scores
from .trainer import Trainer, TrainResult, train
from .interpreter import Interpreter, cluster_contributions, export_embeddings
from .classification import ClassificationService
from .pipeline import PipelineRunner, run_pipeline

__all__ = [
    "Evaluator",
    "evaluate",
    "f1_scores",
    "Trainer",
    "TrainResult",
    "train",
    "Interpreter",
    "cluster_contributions",
    "export_embeddings",
    "ClassificationService",
    "PipelineRunner",
    "run_pipeline",
]
