"""Intent belief over the human's current task target.

Evidence per remaining task combines distance and heading-alignment cues
into exp(-alpha*d + beta*c); the previous belief is exponentially smoothed
toward the raw evidence and renormalized, with completed tasks pinned to
exactly zero. Updates cost O(|remaining|) and run at control rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .world import Task


class EmptyTaskSet(ValueError):
    """No remaining tasks to hold belief over."""


@dataclass(frozen=True)
class IntentParams:
    alpha: float = 0.3   # distance sensitivity (1/m), > 0
    beta: float = 1.0    # directional weight, >= 0
    gamma: float = 0.3   # smoothing rate in (0, 1]
    epsilon: float = 0.05  # speed threshold / direction-denominator floor (m)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class HumanTrace:
    prev: tuple[float, float]
    current: tuple[float, float]

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.current[0] - self.prev[0], self.current[1] - self.prev[1])


@dataclass(frozen=True)
class IntentBelief:
    probs: dict  # task id -> probability, remaining tasks only

    @property
    def top(self):
        return top_candidate(self)


def initial_belief(remaining) -> IntentBelief:
    """Uniform belief over the remaining tasks."""
    tasks = list(remaining)
    if not tasks:
        raise EmptyTaskSet("cannot start a belief over zero tasks")
    p = 1.0 / len(tasks)
    return IntentBelief(probs={t.id: p for t in tasks})


def update_belief(prev: IntentBelief, trace: HumanTrace, remaining,
                  params: IntentParams) -> IntentBelief:
    """One smoothing step toward the current geometric evidence.

    `remaining` lists the uncompleted tasks (order defines tie-breaking);
    previous-belief entries for tasks no longer remaining are dropped before
    mixing, which transfers their mass smoothly through renormalization.
    """
    tasks: list[Task] = list(remaining)
    if not tasks:
        raise EmptyTaskSet("no remaining tasks")
    task_xy = np.array([t.position for t in tasks], dtype=np.float64)
    vx, vy = trace.velocity
    scores = kernels.evidence_scores(trace.current[0], trace.current[1], vx, vy,
                                     task_xy, params.alpha, params.beta,
                                     params.epsilon)
    prev_vec = np.array([prev.probs.get(t.id, 0.0) for t in tasks])
    mixed = (1.0 - params.gamma) * prev_vec + params.gamma * scores
    total = float(mixed.sum())
    if total <= 0.0 or not math.isfinite(total):
        mixed = np.full(len(tasks), 1.0 / len(tasks))  # evidence underflow
        total = 1.0
    probs = {t.id: float(v / total) for t, v in zip(tasks, mixed)}
    return IntentBelief(probs=probs)


def top_candidate(belief: IntentBelief):
    """Most likely task and its probability; first-listed task wins ties."""
    best_id = None
    best_p = -1.0
    for tid, p in belief.probs.items():
        if p > best_p:
            best_id, best_p = tid, p
    if best_id is None:
        raise EmptyTaskSet("belief has no entries")
    return best_id, best_p
