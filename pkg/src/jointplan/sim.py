"""Discrete-time episode runner, scripted humans, and metrics.

Mode-1 episodes ground the instruction targets, then resolve traversability
per leg under one of three strategies (optimal query policy, single-event
exhaustive verification of every uncertain object, or conservative no-query
planning). Mode-2 episodes advance a scripted human and the robot policy in
lockstep ticks, completing independent tasks when any agent is in radius
and cooperative tasks when both are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .coordination import AgentState, CoordinationParams, baseline_nearest, select_action
from .grounding import KnowledgeBase, ground_instruction
from .intent import HumanTrace, IntentParams, initial_belief, update_belief
from .policy import CostParams, GroundTruthOracle, execute_queries, solve_policy
from .search import NoPathUnderAnyHypothesis, build_decision_tree, plan_with_hypotheses, shortest_path
from .world import (
    COOPERATIVE,
    RasterizedScene,
    SemanticScene,
    rasterize,
    with_known_traversability,
)

DEFAULT_TICK_DT = 0.1
DEFAULT_MAX_TICKS = 3000
DEFAULT_SPEED = 1.0
AMBIGUOUS_HEADING_NOISE = 0.6


class AnswerKeyError(ValueError):
    """Scenario answer key missing or inconsistent with the instruction."""


# ---------------------------------------------------------------------------
# mode 1: instructed planning under uncertainty


@dataclass(frozen=True)
class Mode1Result:
    outcome: str  # "success" | "failure" | "infeasible"
    reason: str
    targets: tuple
    legs: tuple  # per leg: tuple of world waypoints
    waypoints: tuple  # concatenated world waypoints
    path_cost: float
    query_events: int
    objects_verified: int
    target_queries: int
    accrued_cost: float
    transcript: tuple

    @property
    def success(self) -> bool:
        return self.outcome == "success"


def _goal_point(scene: SemanticScene, raster: RasterizedScene, object_id: str):
    """Navigation goal for an object: its center cell, or the nearest free
    cell ringing the object when the center rasterizes as blocked."""
    obj = scene.object_by_id(object_id)
    center = obj.aabb.center
    grid = scene.grid
    cell = grid.world_to_cell(center)
    if cell not in raster.static:
        return grid.cell_to_world(cell)
    own = grid.cells_overlapping(obj.aabb.inflate(scene.safety_margin))
    ring = set()
    for (i, j) in own:
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                c = (i + di, j + dj)
                if grid.in_bounds(c) and c not in raster.static and c not in own:
                    ring.add(c)
    if not ring:
        raise NoPathUnderAnyHypothesis(f"no free cell adjacent to '{object_id}'")
    best = min(ring, key=lambda c: (math.dist(grid.cell_to_world(c), center), c))
    return grid.cell_to_world(best)


def answer_key_channel(answer_key: dict):
    """Target-question channel backed by a scenario's authored answer key."""
    answers = (answer_key or {}).get("answers", {})

    def channel(question, options, description):
        key = " ".join(description.lower().split())
        for k, v in answers.items():
            if " ".join(k.lower().split()) == key:
                if v not in options:
                    raise AnswerKeyError(
                        f"answer key maps '{description}' to '{v}' which is not a candidate")
                return v
        raise AnswerKeyError(f"answer key has no entry for '{description}'")

    return channel


def _check_collision_free(scene, raster, cell_paths, ground_truth) -> bool:
    """Independent re-check: no waypoint crosses a truly blocked cell."""
    blocked = set(raster.static)
    for oid, passable in ground_truth.items():
        if not passable:
            blocked |= raster.uncertain.get(oid, frozenset())
    return all(cell not in blocked for path in cell_paths for cell in path)


def run_mode1_episode(scene: SemanticScene, strategy: str = "optimal", *,
                      ground_truth: dict | None = None,
                      costs: CostParams | None = None,
                      tau: float = 0.5) -> Mode1Result:
    """Ground the instruction, resolve traversability, plan every leg.

    Strategies: "optimal" runs the DP query policy against the ground-truth
    oracle; "exhaustive" verifies every uncertain object in one event up
    front; "none" asks nothing, treats every uncertain object as blocked,
    and resolves ambiguous targets by the passive nearest-pick.
    """
    if strategy not in ("optimal", "exhaustive", "none"):
        raise ValueError(f"unknown strategy '{strategy}'")
    if costs is None:
        costs = CostParams()
    gt = dict(ground_truth if ground_truth is not None else scene.ground_truth or {})
    for obj in scene.uncertain_objects:
        if obj.id not in gt:
            raise AnswerKeyError(f"ground truth missing uncertain object '{obj.id}'")

    raster = rasterize(scene)
    transcript = []
    kb = KnowledgeBase()

    # --- target grounding
    target_queries = 0
    targets: list[str] = []
    true_targets = (scene.answer_key or {}).get("true_targets")
    if scene.instruction is not None and scene.instruction.navigation_steps:
        human = None if strategy == "none" else answer_key_channel(scene.answer_key)
        try:
            targets, target_queries = ground_instruction(
                scene.instruction, scene, kb, tau=tau, human=human,
                default_pick=(strategy == "none"))
        except Exception as e:
            return Mode1Result(outcome="failure", reason=f"grounding failed: {e}",
                               targets=(), legs=(), waypoints=(), path_cost=0.0,
                               query_events=0, objects_verified=0, target_queries=0,
                               accrued_cost=0.0, transcript=())
        goals = [_goal_point(scene, raster, oid) for oid in targets]
        if true_targets is not None and list(targets) != list(true_targets):
            wrong = [f"{got}!={want}" for got, want in zip(targets, true_targets)
                     if got != want]
            return Mode1Result(outcome="failure",
                               reason=f"wrong target ({', '.join(wrong)})",
                               targets=tuple(targets), legs=(), waypoints=(),
                               path_cost=0.0, query_events=target_queries,
                               objects_verified=0, target_queries=target_queries,
                               accrued_cost=target_queries * costs.lambda1,
                               transcript=tuple(transcript))
    else:
        goals = [scene.goal]

    # --- traversability resolution + leg planning
    known: dict[str, bool] = {}
    events = 0
    objects = 0
    oracle = GroundTruthOracle(gt)

    if strategy == "exhaustive" and scene.uncertain_objects:
        ids = tuple(o.id for o in scene.uncertain_objects)
        answers = oracle(ids)
        known.update(answers)
        events += 1
        objects += len(ids)
        transcript.append(("query_traversability", ids, dict(answers)))

    legs_cells = []
    legs_world = []
    total_cost = 0.0
    position = scene.start
    for goal in goals:
        if strategy == "none":
            blocked = [o.id for o in scene.uncertain_objects]
            result = shortest_path(scene, blocked, start=position, goal=goal,
                                   raster=raster)
            if result is None:
                return _finish(scene, raster, gt, "failure", "no conservative path",
                               targets, legs_cells, legs_world, total_cost, events,
                               objects, target_queries, costs, transcript)
            cells, cost = result
        elif strategy == "exhaustive":
            blocked = [oid for oid, passable in known.items() if not passable]
            result = shortest_path(scene, blocked, start=position, goal=goal,
                                   raster=raster)
            if result is None:
                return _finish(scene, raster, gt, "infeasible", "no path under ground truth",
                               targets, legs_cells, legs_world, total_cost, events,
                               objects, target_queries, costs, transcript)
            cells, cost = result
        else:  # optimal
            leg_scene = with_known_traversability(scene, known)
            leg_raster = rasterize(leg_scene)
            try:
                catalog = plan_with_hypotheses(leg_scene, raster=leg_raster,
                                               start=position, goal=goal)
            except NoPathUnderAnyHypothesis:
                return _finish(scene, raster, gt, "infeasible", "no candidate paths",
                               targets, legs_cells, legs_world, total_cost, events,
                               objects, target_queries, costs, transcript)
            tree = build_decision_tree(catalog)
            priors = {o.id: o.prior for o in leg_scene.uncertain_objects}
            policy = solve_policy(tree, {oid: priors[oid] for oid in tree.relevant_ids},
                                  costs)
            run = execute_queries(policy, oracle)
            events += run.events
            objects += run.objects_verified
            for asked, answers in run.transcript:
                known.update(answers)
                transcript.append(("query_traversability", asked, dict(answers)))
            if run.outcome != "path":
                return _finish(scene, raster, gt, "infeasible", "queries proved leg infeasible",
                               targets, legs_cells, legs_world, total_cost, events,
                               objects, target_queries, costs, transcript)
            chosen = catalog.paths[run.path_index]
            cells, cost = chosen.waypoints, chosen.cost
        legs_cells.append(tuple(cells))
        legs_world.append(tuple(scene.grid.cell_to_world(c) for c in cells))
        total_cost += cost
        position = scene.grid.cell_to_world(cells[-1])
        transcript.append(("leg", len(legs_cells), cost))

    return _finish(scene, raster, gt, "success", "", targets, legs_cells, legs_world,
                   total_cost, events, objects, target_queries, costs, transcript)


def _finish(scene, raster, gt, outcome, reason, targets, legs_cells, legs_world,
            total_cost, events, objects, target_queries, costs, transcript) -> Mode1Result:
    if outcome == "success":
        if not _check_collision_free(scene, raster, legs_cells, gt):
            outcome, reason = "failure", "executed path crosses a blocked cell"
    waypoints: list = []
    for leg in legs_world:
        for p in leg:
            if not waypoints or waypoints[-1] != p:
                waypoints.append(p)
    accrued = (events + target_queries) * costs.lambda1 + objects * costs.lambda2
    return Mode1Result(outcome=outcome, reason=reason, targets=tuple(targets),
                       legs=tuple(tuple(leg) for leg in legs_world),
                       waypoints=tuple(waypoints), path_cost=total_cost,
                       query_events=events + target_queries,
                       objects_verified=objects, target_queries=target_queries,
                       accrued_cost=accrued, transcript=tuple(transcript))


# ---------------------------------------------------------------------------
# mode 2: intent-aware collaboration


@dataclass
class ScriptedHuman:
    """Plan-following human: visits its task list in order at fixed speed.

    The ambiguous behavior adds Gaussian heading noise and one plan swap
    (remaining visits reversed) at the first completion it observes. At a
    cooperative task it waits for the robot up to `wait_timeout`, then
    rotates the task to the end of its plan when other work remains.
    """
    plan: tuple
    speed: float = DEFAULT_SPEED
    behavior: str = "rational"  # "rational" | "ambiguous"
    heading_noise: float = 0.0
    wait_timeout: float = 5.0

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("human speed must be > 0")
        if self.behavior == "ambiguous" and self.heading_noise == 0.0:
            self.heading_noise = AMBIGUOUS_HEADING_NOISE


@dataclass
class _HumanRuntime:
    position: tuple
    plan: list
    waiting_since: float | None = None
    swapped: bool = False


@dataclass(frozen=True)
class TickRecord:
    t: float
    human: tuple
    robot: tuple
    belief: dict
    decision_target: str
    decision_mode: str
    completions: tuple
    human_involved: tuple
    remaining_after: tuple


@dataclass
class EpisodeLog:
    ticks: list = field(default_factory=list)
    transcript: tuple = ()
    outcome: str = ""
    tick_dt: float = DEFAULT_TICK_DT
    tasks: tuple = ()


@dataclass(frozen=True)
class Metrics:
    time: float = 0.0
    total_dist: float = 0.0
    human_dist: float = 0.0
    robot_dist: float = 0.0
    avg_true_target_prob: float = float("nan")
    top1_accuracy: float = float("nan")
    query_events: int = 0
    objects_verified: int = 0
    expected_remaining_dist: tuple = ()
    outcome: str = ""


def _step_toward(position, target, max_step, rng=None, noise=0.0):
    dx = target[0] - position[0]
    dy = target[1] - position[1]
    dist = math.hypot(dx, dy)
    if dist <= 1e-12:
        return position
    step = min(max_step, dist)
    angle = math.atan2(dy, dx)
    if noise > 0.0 and rng is not None:
        angle += rng.normal(0.0, noise)
    return (position[0] + step * math.cos(angle),
            position[1] + step * math.sin(angle))


def _advance_human(runtime: _HumanRuntime, human: ScriptedHuman, tasks_by_id,
                   completed: set, robot_pos, now: float, dt: float, rng) -> tuple:
    plan = [tid for tid in runtime.plan if tid not in completed]
    if not plan:
        runtime.waiting_since = None
        return runtime.position
    target = tasks_by_id[plan[0]]
    at_task = math.dist(runtime.position, target.position) <= target.completion_radius
    if at_task and target.kind == COOPERATIVE:
        robot_there = math.dist(robot_pos, target.position) <= target.completion_radius
        if not robot_there:
            if runtime.waiting_since is None:
                runtime.waiting_since = now
            elif now - runtime.waiting_since >= human.wait_timeout and len(plan) > 1:
                # rotate: try other work first, come back to the cooperative task
                runtime.plan = [t for t in runtime.plan if t != target.id] + [target.id]
                runtime.waiting_since = None
            return runtime.position
        runtime.waiting_since = None
        return runtime.position
    runtime.waiting_since = None
    if at_task:
        return runtime.position  # completion phase will pick it up
    return _step_toward(runtime.position, target.position, human.speed * dt,
                        rng=rng, noise=human.heading_noise)


def run_mode2_episode(scene: SemanticScene, human: ScriptedHuman, *,
                      robot_policy: str = "intent",
                      intent_params: IntentParams | None = None,
                      coord_params: CoordinationParams | None = None,
                      tick_dt: float = DEFAULT_TICK_DT,
                      robot_speed: float | None = None,
                      max_ticks: int = DEFAULT_MAX_TICKS,
                      seed: int = 0) -> tuple:
    """Run one collaboration episode; returns (EpisodeLog, Metrics)."""
    if tick_dt <= 0:
        raise ValueError("tick_dt must be > 0")
    if robot_policy not in ("intent", "nearest"):
        raise ValueError(f"unknown robot policy '{robot_policy}'")
    if intent_params is None:
        intent_params = IntentParams()
    if coord_params is None:
        kw = scene.coordination or {}
        coord_params = CoordinationParams(**kw)
    speeds = scene.speeds or {}
    human = replace(human, speed=float(speeds.get("human", human.speed)))
    if robot_speed is None:
        robot_speed = float(speeds.get("robot", DEFAULT_SPEED))

    tasks = list(scene.tasks)
    if not tasks:
        raise ValueError("mode-2 scene has no tasks")
    tasks_by_id = {t.id: t for t in tasks}
    for tid in human.plan:
        if tid not in tasks_by_id:
            raise ValueError(f"human plan references unknown task '{tid}'")

    rng = np.random.default_rng(seed)
    hpos = scene.human_start if scene.human_start is not None else scene.start
    rpos = scene.robot_start if scene.robot_start is not None else scene.goal
    h_runtime = _HumanRuntime(position=hpos, plan=list(human.plan))
    robot = AgentState(position=rpos)
    completed: set = set()
    belief = initial_belief(tasks)
    log = EpisodeLog(tick_dt=tick_dt, tasks=tuple(tasks))
    human_dist = 0.0
    robot_dist = 0.0

    for tick in range(1, max_ticks + 1):
        now = tick * tick_dt
        remaining = [t for t in tasks if t.id not in completed]

        prev_h = h_runtime.position
        h_runtime.position = _advance_human(h_runtime, human, tasks_by_id, completed,
                                            robot.position, now, tick_dt, rng)
        human_dist += math.dist(prev_h, h_runtime.position)

        belief = update_belief(belief, HumanTrace(prev=prev_h, current=h_runtime.position),
                               remaining, intent_params)

        if robot_policy == "intent":
            decision = select_action(robot, belief, remaining, coord_params, now,
                                     human_position=h_runtime.position)
        else:
            decision = baseline_nearest(robot, remaining)
        robot.current_target = decision.target
        if decision.mode == "wait_at_target":
            if robot.waiting_since is None:
                robot.waiting_since = now
        else:
            robot.waiting_since = None
            prev_r = robot.position
            robot.position = _step_toward(robot.position,
                                          tasks_by_id[decision.target].position,
                                          robot_speed * tick_dt)
            robot_dist += math.dist(prev_r, robot.position)

        completions = []
        human_involved = []
        for task in remaining:
            h_in = math.dist(h_runtime.position, task.position) <= task.completion_radius
            r_in = math.dist(robot.position, task.position) <= task.completion_radius
            done = (h_in and r_in) if task.kind == COOPERATIVE else (h_in or r_in)
            if done:
                completions.append(task.id)
                if h_in:
                    human_involved.append(task.id)
        completed.update(completions)
        if completions and human.behavior == "ambiguous" and not h_runtime.swapped:
            left = [tid for tid in h_runtime.plan if tid not in completed]
            h_runtime.plan = [tid for tid in h_runtime.plan if tid in completed] + left[::-1]
            h_runtime.swapped = True

        log.ticks.append(TickRecord(
            t=now, human=h_runtime.position, robot=robot.position,
            belief=dict(belief.probs), decision_target=decision.target,
            decision_mode=decision.mode, completions=tuple(completions),
            human_involved=tuple(human_involved),
            remaining_after=tuple(t.id for t in tasks if t.id not in completed)))

        if len(completed) == len(tasks):
            log.outcome = "completed"
            break
    else:
        log.outcome = "budget_exhausted"

    metrics = compute_metrics(log, human_dist=human_dist, robot_dist=robot_dist)
    return log, metrics


def _greedy_remaining_distance(human, robot, remaining_tasks) -> float:
    """Greedy nearest-assignment travel estimate over the remaining tasks.

    Cooperative tasks account for both agents' travel and move both virtual
    positions there.
    """
    pos = {"human": human, "robot": robot}
    left = list(remaining_tasks)
    total = 0.0
    while left:
        best = None
        for task in left:
            for agent in ("human", "robot"):
                d = math.dist(pos[agent], task.position)
                key = (d, task.id, agent)
                if best is None or key < best[0]:
                    best = (key, task, agent)
        _, task, agent = best
        if task.kind == COOPERATIVE:
            total += math.dist(pos["human"], task.position)
            total += math.dist(pos["robot"], task.position)
            pos["human"] = task.position
            pos["robot"] = task.position
        else:
            total += math.dist(pos[agent], task.position)
            pos[agent] = task.position
        left.remove(task)
    return total


def compute_metrics(log: EpisodeLog, *, human_dist: float | None = None,
                    robot_dist: float | None = None) -> Metrics:
    """Intent and efficiency metrics from a finished episode log.

    The true target at each tick is the next task the human is involved in
    completing; ticks after the human's final completion are unscored.
    """
    ticks = log.ticks
    if not ticks:
        return Metrics(outcome=log.outcome)
    if human_dist is None:
        human_dist = sum(math.dist(a.human, b.human) for a, b in zip(ticks, ticks[1:]))
    if robot_dist is None:
        robot_dist = sum(math.dist(a.robot, b.robot) for a, b in zip(ticks, ticks[1:]))

    human_completions = [(i, tid) for i, rec in enumerate(ticks)
                         for tid in rec.human_involved]
    probs = []
    hits = 0
    scored = 0
    for i, rec in enumerate(ticks):
        true_task = next((tid for j, tid in human_completions if j >= i), None)
        if true_task is None:
            continue
        scored += 1
        probs.append(rec.belief.get(true_task, 0.0))
        best_id, best_p = None, -1.0
        for tid, p in rec.belief.items():  # first-listed wins ties
            if p > best_p:
                best_id, best_p = tid, p
        if best_id == true_task:
            hits += 1

    tasks_by_id = {t.id: t for t in log.tasks}
    curve = []
    for rec in ticks:
        remaining = [tasks_by_id[tid] for tid in rec.remaining_after]
        curve.append(_greedy_remaining_distance(rec.human, rec.robot, remaining))

    return Metrics(
        time=ticks[-1].t,
        total_dist=human_dist + robot_dist,
        human_dist=human_dist,
        robot_dist=robot_dist,
        avg_true_target_prob=(sum(probs) / scored) if scored else float("nan"),
        top1_accuracy=(hits / scored) if scored else float("nan"),
        expected_remaining_dist=tuple(curve),
        outcome=log.outcome,
    )


def scripted_human_for(scene: SemanticScene, behavior: str,
                       wait_timeout: float | None = None) -> ScriptedHuman:
    """Build the scripted human for a named behavior case.

    Plans come from the scene's `human_plans` table; `ambiguous` reuses the
    first rational plan with heading noise and a mid-episode swap.
    """
    plans = scene.human_plans or {}
    if behavior == "ambiguous":
        plan = plans.get("ambiguous") or plans.get("rational_a") \
            or [t.id for t in scene.tasks]
        kind = "ambiguous"
    else:
        plan = plans.get(behavior) or [t.id for t in scene.tasks]
        kind = "rational"
    if wait_timeout is None:
        wait_timeout = (scene.coordination or {}).get("wait_timeout", 5.0)
    return ScriptedHuman(plan=tuple(plan), behavior=kind, wait_timeout=wait_timeout)
