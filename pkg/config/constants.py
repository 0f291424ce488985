"""
Constants for the MALEFIC Classifier

This module contains the fixed orderings, lexicons, channel layouts and
numeric defaults used throughout the application.
"""

from typing import Dict, FrozenSet, List, Tuple

# ===== Orderings =====

# Fixed modality order; index 0..M-1 everywhere (masks, attention rows, exports)
MODALITY_ORDER: Tuple[str, ...] = (
    "text",
    "client_context",
    "therapist_context",
    "audio",
    "face",
    "body",
)

# Label order for logits, F1 vectors and confusion matrices
LABEL_ORDER: Tuple[str, ...] = ("CT", "ST", "FN")

# Modalities whose payload is a single precomputed embedding vector
EMBEDDING_MODALITIES: FrozenSet[str] = frozenset(
    {"text", "client_context", "therapist_context", "audio"}
)

# Modalities whose payload is a (time x channel) feature matrix
SEQUENCE_MODALITIES: FrozenSet[str] = frozenset({"face", "body"})

# ===== Transcript Reorganization =====

BACKCHANNEL_LEXICON: FrozenSet[str] = frozenset(
    {"yeah", "mm-hmm", "right", "okay", "uh-huh", "mm", "sure"}
)
DEFAULT_MAX_BACKCHANNEL_TOKENS = 3
SENTENCE_TERMINATORS: Tuple[str, ...] = (".", "?", "!")
THERAPIST_CONTEXT_MAX_TOKENS = 128

# ===== Expressivity Features =====

UPPER_FACE_AUS: Tuple[int, ...] = (1, 2, 4, 5, 6, 7, 9, 45)
AU_COLUMNS: List[str] = [f"AU{au:02d}_r" for au in UPPER_FACE_AUS]
GAZE_COLUMNS: List[str] = ["gaze_angle_x", "gaze_angle_y"]
HEAD_POSE_COLUMNS: List[str] = ["pose_Tx", "pose_Ty", "pose_Tz", "pose_Rx", "pose_Ry", "pose_Rz"]

# Face feature channel order (documented header of *.au.csv after frame/timestamp/success)
FACE_CHANNELS: List[str] = AU_COLUMNS + GAZE_COLUMNS + HEAD_POSE_COLUMNS
AU_CSV_HEADER: List[str] = ["frame", "timestamp", "success"] + FACE_CHANNELS
AU_INTENSITY_RANGE: Tuple[float, float] = (0.0, 5.0)

BODY_JOINTS: Tuple[str, ...] = ("left_wrist", "right_wrist", "neck", "mid_hip")
BODY_CHANNELS: List[str] = ["amplitude", "qom"]

JOINT_CONFIDENCE_THRESHOLD = 0.3
FRAMING_EPS = 1e-6
MEDIAN_KERNEL = 5
QOM_LAG_FRAMES = 10

# ===== Network Shapes =====

LEAKY_RELU_SLOPE = 0.01
DEFAULT_FUSION_DIM = 64
ATTENTION_KEY_DIM = 16
CONV_FILTERS = 16
CONV_WIDTH = 3
TEXT_HIDDEN_DIM = 30
FACE_EMBEDDING_DIM = 256
BODY_EMBEDDING_DIM = 8
ENCODER_DROPOUT = 0.1
MODALITY_DROPOUT_RATE = 0.2
LAYER_NORM_EPS = 1e-5

# ===== Optimization =====

ADAMW_BETAS: Tuple[float, float] = (0.9, 0.999)
ADAMW_EPS = 1e-8
ADAMW_WEIGHT_DECAY = 0.01
ONE_CYCLE_WARMUP_FRACTION = 0.3
ONE_CYCLE_DIV_FACTOR = 25.0
ONE_CYCLE_FINAL_DIV_FACTOR = 1e4

# ===== Evaluation & Interpretation =====

BOOTSTRAP_SAMPLES = 1000
CONFIDENCE_LEVEL = 0.95
CLUSTER_K_RANGE: Tuple[int, int] = (2, 10)
CLUSTER_RESTARTS = 20

# ===== Corpus Defaults =====

REFERENCE_CLASS_PROPORTIONS: Dict[str, float] = {"CT": 0.24, "FN": 0.60, "ST": 0.16}
REFERENCE_AVAILABILITY: Dict[str, float] = {"text": 1.0, "audio": 1.0, "face": 0.78, "body": 0.39}
VALIDATION_FRACTION = 0.2

# ===== File Suffixes =====

TRANSCRIPT_SUFFIX = ".transcript.jsonl"
SENTENCES_SUFFIX = ".sentences.jsonl"
EMBEDDING_SUFFIX = ".emb.f32"
EMBEDDING_SIDECAR_SUFFIX = ".emb.json"
POSE_SUFFIX = ".pose.jsonl"
AU_SUFFIX = ".au.csv"
FEATURE_SUFFIX = ".feat.csv"
SELECTION_SUFFIX = ".sel.json"
INDEX_FILE = "index.json"
