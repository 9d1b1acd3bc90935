"""Hybrid recommendation with time-decayed user interest profiles."""

from .config import Config
from .engine import Engine
from .evaluation import EvalReport, emit_report, kfold_split, precision_recall_f1, run_experiment
from .fusion import FusionWeights, RankedList, derive_weights, fuse, normalize_scores
from .ingest import (
    Dataset,
    Interaction,
    ItemMeta,
    ParseError,
    dataset_stats,
    generate_synthetic_dataset,
    generate_synthetic_events,
    parse_event_log,
    parse_movielens_movies,
    parse_movielens_ratings,
)
from .profile import (
    DecayConfig,
    FeatureVector,
    UserInterestProfile,
    build_item_features,
    decay_weight,
    update_profile,
)

__version__ = "0.1.0"
