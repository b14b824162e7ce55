"""Coordination-aware task selection with stability gating.

Rule precedence: commitment (finish what you are close to) beats the
confidence gate, which beats the task-type rules. A confident cooperative
top-candidate is pursued directly, waiting a bounded time at the task for
the human; a confident independent top-candidate sends the robot to the
nearest *other* independent task so effort is not duplicated. Below the
gate the robot keeps its current target, or falls back to the nearest task
when it has none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .intent import IntentBelief, top_candidate
from .world import COOPERATIVE, INDEPENDENT, Task


class EmptyTaskSet(ValueError):
    """No remaining tasks to select from."""


@dataclass(frozen=True)
class CoordinationParams:
    tau_intent: float = 0.5   # confidence gate in (0, 1]
    r_commit: float = 1.5     # commitment radius (m)
    wait_timeout: float = 5.0  # cooperative wait bound (s)

    def __post_init__(self):
        if not 0.0 < self.tau_intent <= 1.0:
            raise ValueError("tau_intent must be in (0, 1]")
        if self.r_commit <= 0:
            raise ValueError("r_commit must be > 0")
        if self.wait_timeout < 0:
            raise ValueError("wait_timeout must be >= 0")


@dataclass
class AgentState:
    position: tuple[float, float]
    current_target: str | None = None
    waiting_since: float | None = None


@dataclass(frozen=True)
class RobotDecision:
    target: str
    mode: str  # pursue_cooperative | complement_independent | keep_current
    #          # | nearest_fallback | wait_at_target


def _dist(a, b) -> float:
    return math.dist(a, b)


def _nearest(position, tasks) -> Task:
    return min(tasks, key=lambda t: (_dist(position, t.position), t.id))


def is_committed(state: AgentState, remaining, r_commit: float) -> bool:
    """True while the current target is uncompleted and within r_commit."""
    if state.current_target is None:
        return False
    target = next((t for t in remaining if t.id == state.current_target), None)
    if target is None:
        return False
    return _dist(state.position, target.position) <= r_commit


def select_action(state: AgentState, belief: IntentBelief, remaining,
                  params: CoordinationParams, now: float,
                  human_position=None) -> RobotDecision:
    """Pick the robot's task-level target for this tick.

    Pure function of its arguments: the episode runner owns the state
    mutations (current target, wait timer). `human_position` feeds the
    human-absent check at cooperative tasks.
    """
    tasks = list(remaining)
    if not tasks:
        raise EmptyTaskSet("no remaining tasks")
    by_id = {t.id: t for t in tasks}

    # (a) commitment dominates everything else
    if is_committed(state, tasks, params.r_commit):
        return RobotDecision(target=state.current_target, mode="keep_current")

    top_id, rho = top_candidate(belief)

    # (b) confidence gate: below it, never switch
    if rho < params.tau_intent:
        if state.current_target is not None and state.current_target in by_id:
            return RobotDecision(target=state.current_target, mode="keep_current")
        return RobotDecision(target=_nearest(state.position, tasks).id,
                             mode="nearest_fallback")

    top = by_id.get(top_id)
    if top is None:  # belief names a just-completed task; fall back
        return RobotDecision(target=_nearest(state.position, tasks).id,
                             mode="nearest_fallback")

    # (c) cooperative top candidate: converge, wait boundedly on arrival
    if top.kind == COOPERATIVE:
        at_task = _dist(state.position, top.position) <= top.completion_radius
        human_absent = (human_position is None
                        or _dist(human_position, top.position) > top.completion_radius)
        if at_task and human_absent:
            if state.waiting_since is None or now - state.waiting_since < params.wait_timeout:
                return RobotDecision(target=top.id, mode="wait_at_target")
            # timeout: re-evaluate with the current belief; same top candidate
            # means one pursue tick and a fresh wait span
        return RobotDecision(target=top.id, mode="pursue_cooperative")

    # (d) independent top candidate: take the nearest other independent task
    others = [t for t in tasks if t.kind == INDEPENDENT and t.id != top.id]
    if others:
        return RobotDecision(target=_nearest(state.position, others).id,
                             mode="complement_independent")
    return RobotDecision(target=top.id, mode="complement_independent")


def baseline_nearest(state: AgentState, remaining) -> RobotDecision:
    """Non-cooperative baseline: nearest uncompleted task, re-picked every tick."""
    tasks = list(remaining)
    if not tasks:
        raise EmptyTaskSet("no remaining tasks")
    return RobotDecision(target=_nearest(state.position, tasks).id,
                         mode="nearest_fallback")
