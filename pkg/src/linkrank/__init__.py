"""Temporal link prediction: snapshots, topology features, candidate
ranking, labeled datasets, classifiers and evaluation."""

__version__ = "0.1.0"

from .errors import (BalanceError, GenerationError, InvariantViolation, LinkRankError,
                     MetricError, ParseError, TrainingError, UnknownVertexError)
from .graph import (ObservationWindow, Snapshot, TemporalGraph, from_edges, load_edge_list,
                    snapshot_at, window_edges)
from .features import FeatureTable, compute_global_features, hits, jaccard
from .ranker import RankerConfig, predict_links, rank_candidates, retrieve_seeds
from .dataset import (Dataset, balance, build_classification_dataset, build_threshold_dataset,
                      read_dataset, write_dataset)
from .learners import TrainConfig, cross_validate, predict, rank_features, train
from .metrics import MetricsReport, build_report
from .synthgen import GenConfig, generate
