"""Time-varying task sampling: queues, schedules, and the queue coin toss.

Training examples live in one queue per task. At each draw a schedule maps
the epoch-fraction clock t to a probability for the focus queue; the rest of
the mass is split uniformly over the other queues. The clock advances by
1/|focus corpus| per drawn example, so t counts epochs of the focus task.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linearize import TrainingExample

SCHEDULE_KINDS = ("constant", "exponential", "sigmoid")


@dataclass
class ScheduleState:
    kind: str
    slope: float
    focus: str
    queue_ids: tuple[str, ...]
    t: float = 0.0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if self.kind == "constant":
            if not (0.0 <= self.slope <= 1.0):
                raise ValueError(f"constant schedule needs slope in [0, 1], got {self.slope}")
        elif self.slope < 0.0:
            raise ValueError(f"{self.kind} schedule needs slope >= 0, got {self.slope}")
        if self.focus not in self.queue_ids:
            raise ValueError(f"focus queue {self.focus!r} not among queues {self.queue_ids}")


def focus_probability(state: ScheduleState) -> float:
    """Probability of drawing from the focus queue at the current clock."""
    if state.t < 0:
        raise ValueError(f"clock must be >= 0, got {state.t}")
    if state.kind == "constant":
        return state.slope
    if state.kind == "exponential":
        return 1.0 - math.exp(-state.slope * state.t)
    return 1.0 / (1.0 + math.exp(-state.slope * state.t))


def queue_distribution(state: ScheduleState) -> np.ndarray:
    """Probability vector over queues in queue_ids order."""
    k = len(state.queue_ids)
    if k == 1:
        return np.ones(1)
    p = focus_probability(state)
    dist = np.full(k, (1.0 - p) / (k - 1))
    dist[state.queue_ids.index(state.focus)] = p
    return dist


def sample_queue(dist: np.ndarray, rng: np.random.Generator) -> int:
    """Multinomial draw of a queue index; deterministic given rng state."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 1 or (dist < 0).any() or abs(dist.sum() - 1.0) > 1e-9:
        raise ValueError(f"malformed distribution {dist!r}")
    u = rng.random()
    return int(np.searchsorted(np.cumsum(dist), u, side="right").clip(0, len(dist) - 1))


class TaskQueue:
    """Shuffled cursor over one task's examples; reshuffles when exhausted."""

    def __init__(self, task: str, examples: list[TrainingExample], rng: np.random.Generator):
        if not examples:
            raise ValueError(f"queue {task!r} is empty")
        self.task = task
        self.examples = list(examples)
        self.rng = rng
        self.order = rng.permutation(len(self.examples))
        self.cursor = 0

    def __len__(self):
        return len(self.examples)

    def next(self) -> TrainingExample:
        ex = self.examples[self.order[self.cursor]]
        self.cursor += 1
        if self.cursor == len(self.examples):
            self.order = self.rng.permutation(len(self.examples))
            self.cursor = 0
        return ex


class ExampleStream:
    """Draws examples queue-by-queue under the schedule, advancing the clock."""

    def __init__(self, queues: dict[str, TaskQueue], state: ScheduleState, rng: np.random.Generator):
        if not queues:
            raise ValueError("no queues to draw from")
        missing = [q for q in state.queue_ids if q not in queues]
        if missing:
            raise ValueError(f"schedule names queues with no data: {missing}")
        self.queues = queues
        self.state = state
        self.rng = rng
        self.draws = 0
        self._focus_size = len(queues[state.focus])

    def next(self) -> TrainingExample:
        dist = queue_distribution(self.state)
        qid = self.state.queue_ids[sample_queue(dist, self.rng)]
        ex = self.queues[qid].next()
        self.draws += 1
        # t counts focus-task epochs exactly: draws / |focus corpus|
        self.state.t = self.draws / self._focus_size
        return ex
