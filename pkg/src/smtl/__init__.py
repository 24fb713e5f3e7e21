"""Scheduled multi-task learning for attentional sequence-to-sequence models.

Trains one encoder-decoder on translation interleaved with linearized
syntax tasks (POS tags, head distances, arc labels); per-task sampling
probabilities follow a pluggable schedule over the training clock.
"""

from .autodiff import AdamState, Graph, Tensor, adam_step
from .config import TrainConfig
from .decoding import beam_decode, greedy_decode
from .linearize import DependencyTree, TrainingExample, delinearize_distances, linearize_distances
from .metrics import corpus_bleu, parse_scores, pos_accuracy
from .model import ModelConfig, Seq2Seq
from .schedule import ScheduleState, TaskQueue, focus_probability, queue_distribution, sample_queue
from .trainer import BestModelTracker, load_model, sweep, train

__version__ = "0.1.0"

__all__ = [
    "AdamState", "Graph", "Tensor", "adam_step",
    "TrainConfig", "beam_decode", "greedy_decode",
    "DependencyTree", "TrainingExample", "delinearize_distances", "linearize_distances",
    "corpus_bleu", "parse_scores", "pos_accuracy",
    "ModelConfig", "Seq2Seq",
    "ScheduleState", "TaskQueue", "focus_probability", "queue_distribution", "sample_queue",
    "BestModelTracker", "load_model", "sweep", "train",
    "__version__",
]
