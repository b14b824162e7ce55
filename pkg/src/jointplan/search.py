"""Hypothesis-augmented A* and the traversability decision tree.

Search states pair a grid cell with a hypothesis set: the uncertain objects
the partial path has entered and therefore assumes passable. Popping the
goal under some hypothesis emits a candidate path and prunes every queued
state whose hypothesis is a superset, so the catalog comes out ordered by
cost with antichain hypotheses (no entry's hypothesis is a superset of an
earlier one's). The catalog then collapses into a total mapping from
traversability configurations to catalog indices.

Hypothesis sets are bit masks over the scene's uncertain objects in their
canonical (authored) order.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .world import Cell, RasterizedScene, SemanticScene, rasterize

INFEASIBLE = -1

MAX_TREE_OBJECTS = 16

_SQRT2 = math.sqrt(2.0)

# (dx, dy, unit step length); diagonals only for 8-connectivity
_STEPS_4 = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0))
_STEPS_8 = _STEPS_4 + ((1, 1, _SQRT2), (1, -1, _SQRT2), (-1, 1, _SQRT2), (-1, -1, _SQRT2))


class NoPathUnderAnyHypothesis(RuntimeError):
    """Search exhausted the queue without reaching the goal under any hypothesis."""


class TooManyUncertainObjects(ValueError):
    """Decision tree would need more than 2**MAX_TREE_OBJECTS entries."""


@dataclass(frozen=True)
class CandidatePath:
    waypoints: tuple[Cell, ...]
    cost: float
    hypothesis: frozenset[str]
    hyp_mask: int  # over the catalog's uncertain_ids order


@dataclass(frozen=True)
class CandidatePathCatalog:
    paths: tuple[CandidatePath, ...]
    uncertain_ids: tuple[str, ...]  # canonical order the masks index into

    @property
    def has_unconditional(self) -> bool:
        return any(p.hyp_mask == 0 for p in self.paths)


@dataclass(frozen=True)
class DecisionTree:
    """Total map from {0,1}^n configurations to catalog indices.

    Configuration index c encodes relevant_ids[i] as passable iff bit i of c
    is set. Entries are catalog indices, or INFEASIBLE when no candidate
    path's hypothesis is satisfied.
    """
    relevant_ids: tuple[str, ...]
    map: np.ndarray  # shape (2**n,), dtype int32

    @property
    def n(self) -> int:
        return len(self.relevant_ids)

    def path_index(self, config_mask: int) -> int:
        return int(self.map[config_mask])


def _heuristic(cell: Cell, goal: Cell, resolution: float, connectivity: int) -> float:
    dx, dy = abs(cell[0] - goal[0]), abs(cell[1] - goal[1])
    if connectivity == 4:
        return resolution * (dx + dy)
    lo, hi = (dx, dy) if dx < dy else (dy, dx)
    return resolution * ((hi - lo) + _SQRT2 * lo)


def _cell_masks(grid_w: int, grid_h: int, raster: RasterizedScene,
                uncertain_ids: tuple[str, ...]) -> dict:
    """Per-cell bit mask of the uncertain objects covering it."""
    masks: dict[Cell, int] = {}
    for i, oid in enumerate(uncertain_ids):
        for cell in raster.uncertain[oid]:
            masks[cell] = masks.get(cell, 0) | (1 << i)
    return masks


def plan_with_hypotheses(scene: SemanticScene, *, connectivity: int | None = None,
                         raster: RasterizedScene | None = None,
                         start=None, goal=None) -> CandidatePathCatalog:
    """Run hypothesis-augmented A* from scene.start to scene.goal.

    Returns the candidate-path catalog in emission order: costs are
    non-decreasing and hypotheses form an antichain. The search stops once
    an unconditional (empty-hypothesis) path is recorded or the queue empties.
    Raises NoPathUnderAnyHypothesis if nothing reaches the goal.
    `start`/`goal` override the scene endpoints (used for per-leg planning).
    """
    if connectivity is None:
        connectivity = scene.connectivity
    if raster is None:
        raster = rasterize(scene)
    grid = scene.grid
    uncertain_ids = tuple(o.id for o in scene.uncertain_objects)
    cover = _cell_masks(grid.width, grid.height, raster, uncertain_ids)
    static = raster.static
    steps = _STEPS_4 if connectivity == 4 else _STEPS_8
    res = grid.resolution

    start = grid.world_to_cell(scene.start if start is None else start)
    goal = grid.world_to_cell(scene.goal if goal is None else goal)
    if start in static:
        raise NoPathUnderAnyHypothesis(f"start cell {start} is statically blocked")

    start_mask = cover.get(start, 0)
    h0 = _heuristic(start, goal, res, connectivity)
    # g is tracked as integer (straight, diagonal) step counts and derived
    # canonically, so equal-cost paths carry bit-identical floats and the
    # emission order is exactly non-decreasing
    # heap entries: (f, h, |H|, cell, mask, straight, diag)
    heap = [(h0, h0, bin(start_mask).count("1"), start, start_mask, 0, 0)]
    best_g: dict[tuple[Cell, int], float] = {(start, start_mask): 0.0}
    parent: dict[tuple[Cell, int], tuple[Cell, int] | None] = {(start, start_mask): None}
    closed: set[tuple[Cell, int]] = set()
    recorded_masks: list[int] = []
    paths: list[CandidatePath] = []

    def dominated(mask: int) -> bool:
        return any((mask & rec) == rec for rec in recorded_masks)

    while heap:
        f, h, _card, cell, mask, n_straight, n_diag = heapq.heappop(heap)
        g = (n_straight + n_diag * _SQRT2) * res
        state = (cell, mask)
        if state in closed or g > best_g.get(state, math.inf):
            continue
        if dominated(mask):
            continue
        closed.add(state)

        if cell == goal:
            waypoints = []
            cur: tuple[Cell, int] | None = state
            while cur is not None:
                waypoints.append(cur[0])
                cur = parent[cur]
            waypoints.reverse()
            ids = frozenset(uncertain_ids[i] for i in range(len(uncertain_ids))
                            if mask & (1 << i))
            paths.append(CandidatePath(waypoints=tuple(waypoints), cost=g,
                                       hypothesis=ids, hyp_mask=mask))
            recorded_masks.append(mask)
            if mask == 0:
                break
            continue

        for dx, dy, step in steps:
            ncell = (cell[0] + dx, cell[1] + dy)
            if not grid.in_bounds(ncell) or ncell in static:
                continue
            nmask = mask | cover.get(ncell, 0)
            if dominated(nmask):
                continue
            nstate = (ncell, nmask)
            if nstate in closed:
                continue
            diag = dx != 0 and dy != 0
            ns, nd = n_straight + (not diag), n_diag + diag
            ng = (ns + nd * _SQRT2) * res
            if ng < best_g.get(nstate, math.inf) - 1e-12:
                best_g[nstate] = ng
                parent[nstate] = state
                nh = _heuristic(ncell, goal, res, connectivity)
                heapq.heappush(heap, (ng + nh, nh, bin(nmask).count("1"),
                                      ncell, nmask, ns, nd))

    if not paths:
        raise NoPathUnderAnyHypothesis(
            f"no path from {start} to {goal} under any hypothesis")
    return CandidatePathCatalog(paths=tuple(paths), uncertain_ids=uncertain_ids)


def build_decision_tree(catalog: CandidatePathCatalog) -> DecisionTree:
    """Collapse a catalog into a total configuration -> path-index map.

    Objects that appear in no hypothesis are excluded (implicitly pruned);
    each configuration maps to the first catalog path whose hypothesis it
    satisfies, or INFEASIBLE when none is.
    """
    union_mask = 0
    for p in catalog.paths:
        union_mask |= p.hyp_mask
    relevant = [i for i in range(len(catalog.uncertain_ids)) if union_mask & (1 << i)]
    n = len(relevant)
    if n > MAX_TREE_OBJECTS:
        raise TooManyUncertainObjects(
            f"{n} decision-relevant objects exceeds the {MAX_TREE_OBJECTS} cap")
    remap = {orig: new for new, orig in enumerate(relevant)}

    path_masks = []
    for p in catalog.paths:
        m = 0
        for orig, new in remap.items():
            if p.hyp_mask & (1 << orig):
                m |= 1 << new
        path_masks.append(m)

    table = np.full(2 ** n, INFEASIBLE, dtype=np.int32)
    for config in range(2 ** n):
        for idx, pm in enumerate(path_masks):
            if (pm & ~config) == 0:
                table[config] = idx
                break
    return DecisionTree(relevant_ids=tuple(catalog.uncertain_ids[i] for i in relevant),
                        map=table)


def consistent_paths(tree: DecisionTree, assignment) -> frozenset[int]:
    """Catalog indices reachable under a partial assignment.

    `assignment` gives one of 0 (blocked), 1 (passable), 2 (unknown) per
    relevant object, in relevant_ids order; a BeliefState works directly.
    The result is the deduplicated set of map values over every completion;
    INFEASIBLE (-1) participates as a value.
    """
    assignment = getattr(assignment, "values", assignment)
    if len(assignment) != tree.n:
        raise ValueError(f"assignment has {len(assignment)} entries, tree has {tree.n}")
    base = 0
    unknown = []
    for i, v in enumerate(assignment):
        if v == 1:
            base |= 1 << i
        elif v == 2:
            unknown.append(i)
        elif v != 0:
            raise ValueError(f"assignment entry {v} not in (0, 1, 2)")
    out = set()
    for bits in range(2 ** len(unknown)):
        config = base
        for k, i in enumerate(unknown):
            if bits & (1 << k):
                config |= 1 << i
        out.add(int(tree.map[config]))
    return frozenset(out)


def catalog_to_json(catalog: CandidatePathCatalog, tree: DecisionTree | None = None) -> dict:
    doc = {
        "uncertain_ids": list(catalog.uncertain_ids),
        "paths": [{
            "waypoints": [list(c) for c in p.waypoints],
            "cost": p.cost,
            "hypothesis": sorted(p.hypothesis),
        } for p in catalog.paths],
        "has_unconditional": catalog.has_unconditional,
    }
    if tree is not None:
        doc["relevant_ids"] = list(tree.relevant_ids)
        doc["map"] = [int(v) for v in tree.map]
    return doc


def shortest_path(scene: SemanticScene, blocked_object_ids, *,
                  start=None, goal=None, connectivity: int | None = None,
                  raster: RasterizedScene | None = None):
    """Plain A* treating the listed uncertain objects as obstacles.

    Returns (waypoints, cost) or None when unreachable. Used for the
    conservative no-query strategy and for replanning once a configuration
    is fully known.
    """
    if connectivity is None:
        connectivity = scene.connectivity
    if raster is None:
        raster = rasterize(scene)
    grid = scene.grid
    static = set(raster.static)
    for oid in blocked_object_ids:
        static |= raster.uncertain.get(oid, frozenset())
    steps = _STEPS_4 if connectivity == 4 else _STEPS_8
    res = grid.resolution

    start_cell = grid.world_to_cell(scene.start if start is None else start)
    goal_cell = grid.world_to_cell(scene.goal if goal is None else goal)
    if start_cell in static or goal_cell in static:
        return None

    h0 = _heuristic(start_cell, goal_cell, res, connectivity)
    heap = [(h0, start_cell, 0, 0)]
    best_g = {start_cell: 0.0}
    parent: dict[Cell, Cell | None] = {start_cell: None}
    closed: set[Cell] = set()
    while heap:
        f, cell, n_straight, n_diag = heapq.heappop(heap)
        g = (n_straight + n_diag * _SQRT2) * res
        if cell in closed:
            continue
        closed.add(cell)
        if cell == goal_cell:
            waypoints = []
            cur: Cell | None = cell
            while cur is not None:
                waypoints.append(cur)
                cur = parent[cur]
            waypoints.reverse()
            return tuple(waypoints), g
        for dx, dy, step in steps:
            ncell = (cell[0] + dx, cell[1] + dy)
            if not grid.in_bounds(ncell) or ncell in static or ncell in closed:
                continue
            diag = dx != 0 and dy != 0
            ns, nd = n_straight + (not diag), n_diag + diag
            ng = (ns + nd * _SQRT2) * res
            if ng < best_g.get(ncell, math.inf) - 1e-12:
                best_g[ncell] = ng
                parent[ncell] = cell
                heapq.heappush(heap, (ng + _heuristic(ncell, goal_cell, res, connectivity),
                                      ncell, ns, nd))
    return None
