"""Scenes, tasks, grids, and scenario file I/O.

World geometry is continuous (meters); planning happens on a uniform grid.
Objects are axis-aligned boxes that rasterize to cell sets after inflation
by the scene safety margin. Uncertain objects are atomic: every cell of an
object shares one traversability bit.

Scenario files are JSON; see `scene_to_json` for the schema. All loaded
values are validated and scenes are immutable after load, so they are safe
to share across concurrent sessions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

Cell = tuple[int, int]
Point = tuple[float, float]

PASSABLE = "passable"
BLOCKED = "blocked"
UNCERTAIN = "uncertain"

INDEPENDENT = "independent"
COOPERATIVE = "cooperative"

DEFAULT_SAFETY_MARGIN = 0.25
DEFAULT_COMPLETION_RADIUS = 0.5


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


class OutOfBoundsError(ValueError):
    """World coordinate falls outside the grid."""


@dataclass(frozen=True)
class AABB:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def inflate(self, margin: float) -> "AABB":
        return AABB(self.xmin - margin, self.ymin - margin,
                    self.xmax + margin, self.ymax + margin)

    @property
    def center(self) -> Point:
        return ((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


@dataclass(frozen=True)
class GridMap:
    origin: Point
    resolution: float
    width: int
    height: int
    static_blocked: frozenset[Cell] = frozenset()

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def contains_point(self, p: Point) -> bool:
        ox, oy = self.origin
        return (ox <= p[0] < ox + self.width * self.resolution
                and oy <= p[1] < oy + self.height * self.resolution)

    def world_to_cell(self, p: Point) -> Cell:
        """Map a world point to its containing cell (floor per axis)."""
        if not self.contains_point(p):
            raise OutOfBoundsError(f"point {p} outside grid bounds")
        ox, oy = self.origin
        return (int(math.floor((p[0] - ox) / self.resolution)),
                int(math.floor((p[1] - oy) / self.resolution)))

    def cell_to_world(self, cell: Cell) -> Point:
        """Center of a cell, the inverse of world_to_cell up to quantization."""
        if not self.in_bounds(cell):
            raise OutOfBoundsError(f"cell {cell} outside grid bounds")
        ox, oy = self.origin
        return (ox + (cell[0] + 0.5) * self.resolution,
                oy + (cell[1] + 0.5) * self.resolution)

    def cells_overlapping(self, box: AABB) -> frozenset[Cell]:
        """Cells whose [i*res, (i+1)*res) span intersects the box, clipped."""
        ox, oy = self.origin
        i0 = int(math.floor((box.xmin - ox) / self.resolution))
        i1 = int(math.floor((box.xmax - ox) / self.resolution))
        j0 = int(math.floor((box.ymin - oy) / self.resolution))
        j1 = int(math.floor((box.ymax - oy) / self.resolution))
        cells = set()
        for i in range(max(i0, 0), min(i1, self.width - 1) + 1):
            for j in range(max(j0, 0), min(j1, self.height - 1) + 1):
                cells.add((i, j))
        return frozenset(cells)


@dataclass(frozen=True)
class SceneObject:
    id: str
    name: str
    aabb: AABB
    traversability: str  # PASSABLE | BLOCKED | UNCERTAIN
    prior: float | None = None  # passable prior, uncertain objects only
    attributes: dict = field(default_factory=dict)
    confidence: float = 1.0

    @property
    def is_uncertain(self) -> bool:
        return self.traversability == UNCERTAIN


@dataclass(frozen=True)
class Task:
    id: str
    position: Point
    kind: str = INDEPENDENT  # INDEPENDENT | COOPERATIVE
    completion_radius: float = DEFAULT_COMPLETION_RADIUS


@dataclass(frozen=True)
class InstructionStep:
    action: str
    target: str | None = None


@dataclass(frozen=True)
class Instruction:
    raw_text: str
    steps: tuple[InstructionStep, ...] = ()

    @property
    def navigation_steps(self) -> tuple[InstructionStep, ...]:
        return tuple(s for s in self.steps if s.target)


@dataclass(frozen=True)
class SemanticScene:
    grid: GridMap
    objects: tuple[SceneObject, ...]
    tasks: tuple[Task, ...]
    start: Point
    goal: Point
    safety_margin: float = DEFAULT_SAFETY_MARGIN
    connectivity: int = 8
    instruction: Instruction | None = None
    answer_key: dict | None = None
    ground_truth: dict | None = None
    human_start: Point | None = None
    robot_start: Point | None = None
    human_plans: dict | None = None
    speeds: dict | None = None
    coordination: dict | None = None

    @property
    def uncertain_objects(self) -> tuple[SceneObject, ...]:
        """Uncertain objects in canonical (authored) order."""
        return tuple(o for o in self.objects if o.is_uncertain)

    def object_by_id(self, object_id: str) -> SceneObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(object_id)

    def task_by_id(self, task_id: str) -> Task:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise KeyError(task_id)


@dataclass(frozen=True)
class RasterizedScene:
    """Planner-ready occupancy: static cells plus per-uncertain-object cells."""
    static: frozenset[Cell]
    uncertain: dict  # object id -> frozenset[Cell]


def rasterize(scene: SemanticScene) -> RasterizedScene:
    """Convert object geometry into occupancy, inflating by the safety margin.

    Known-blocked objects join the static set together with any authored
    blocked cells; each uncertain object maps to its own cell set. Cells are
    clipped to bounds (fully out-of-bounds objects yield empty sets).
    """
    static = set(scene.grid.static_blocked)
    uncertain = {}
    for obj in scene.objects:
        cells = scene.grid.cells_overlapping(obj.aabb.inflate(scene.safety_margin))
        if obj.traversability == BLOCKED:
            static |= cells
        elif obj.traversability == UNCERTAIN:
            uncertain[obj.id] = cells
    return RasterizedScene(static=frozenset(static), uncertain=uncertain)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ScenarioError(msg)


def _parse_point(value, label: str) -> Point:
    _require(isinstance(value, (list, tuple)) and len(value) == 2,
             f"{label} must be a [x, y] pair")
    return (float(value[0]), float(value[1]))


def _parse_object(raw: dict) -> SceneObject:
    _require("id" in raw, "object missing 'id'")
    oid = str(raw["id"])
    _require("aabb" in raw, f"object '{oid}' missing 'aabb'")
    lo = _parse_point(raw["aabb"].get("min"), f"object '{oid}' aabb.min")
    hi = _parse_point(raw["aabb"].get("max"), f"object '{oid}' aabb.max")
    _require(lo[0] <= hi[0] and lo[1] <= hi[1],
             f"object '{oid}' aabb min exceeds max")
    trav = raw.get("traversability", PASSABLE)
    prior = None
    if isinstance(trav, dict):
        _require("prior" in trav, f"object '{oid}' traversability dict needs 'prior'")
        prior = float(trav["prior"])
        _require(0.0 < prior < 1.0,
                 f"object '{oid}' prior {prior} not strictly inside (0, 1)")
        trav = UNCERTAIN
    _require(trav in (PASSABLE, BLOCKED, UNCERTAIN),
             f"object '{oid}' has unknown traversability '{trav}'")
    if trav == UNCERTAIN and prior is None:
        raise ScenarioError(f"object '{oid}' is uncertain but has no prior")
    return SceneObject(
        id=oid,
        name=str(raw.get("name", oid)),
        aabb=AABB(lo[0], lo[1], hi[0], hi[1]),
        traversability=trav,
        prior=prior,
        attributes={str(k): str(v) for k, v in raw.get("attributes", {}).items()},
        confidence=float(raw.get("confidence", 1.0)),
    )


def _parse_task(raw: dict) -> Task:
    _require("id" in raw, "task missing 'id'")
    tid = str(raw["id"])
    pos = _parse_point(raw.get("position"), f"task '{tid}' position")
    kind = raw.get("kind", INDEPENDENT)
    _require(kind in (INDEPENDENT, COOPERATIVE),
             f"task '{tid}' has unknown kind '{kind}'")
    radius = float(raw.get("completion_radius", DEFAULT_COMPLETION_RADIUS))
    _require(radius > 0, f"task '{tid}' completion_radius must be > 0")
    return Task(id=tid, position=pos, kind=kind, completion_radius=radius)


def _parse_instruction(raw: dict) -> Instruction:
    steps = tuple(InstructionStep(action=str(s.get("action", "navigate")),
                                  target=s.get("target"))
                  for s in raw.get("steps", []))
    return Instruction(raw_text=str(raw.get("text", "")), steps=steps)


def scene_from_json(doc: dict) -> SemanticScene:
    """Build and validate a scene from a parsed scenario document."""
    _require(isinstance(doc, dict), "scenario root must be an object")
    _require("grid" in doc, "scenario missing 'grid'")
    g = doc["grid"]
    resolution = float(g.get("resolution", 0.0))
    _require(resolution > 0, "grid.resolution must be > 0")
    width, height = int(g.get("width", 0)), int(g.get("height", 0))
    _require(width >= 1 and height >= 1, "grid width/height must be >= 1")
    blocked = frozenset((int(c[0]), int(c[1])) for c in g.get("blocked_cells", []))
    grid = GridMap(origin=_parse_point(g.get("origin", [0.0, 0.0]), "grid.origin"),
                   resolution=resolution, width=width, height=height,
                   static_blocked=blocked)
    for cell in blocked:
        _require(grid.in_bounds(cell), f"blocked cell {cell} outside grid")

    objects = tuple(_parse_object(o) for o in doc.get("objects", []))
    seen = set()
    for o in objects:
        _require(o.id not in seen, f"duplicate object id '{o.id}'")
        seen.add(o.id)

    tasks = tuple(_parse_task(t) for t in doc.get("tasks", []))
    seen = set()
    for t in tasks:
        _require(t.id not in seen, f"duplicate task id '{t.id}'")
        seen.add(t.id)

    connectivity = int(doc.get("connectivity", 8))
    _require(connectivity in (4, 8), "connectivity must be 4 or 8")

    scene = SemanticScene(
        grid=grid,
        objects=objects,
        tasks=tasks,
        start=_parse_point(doc.get("start", [0.0, 0.0]), "start"),
        goal=_parse_point(doc.get("goal", doc.get("start", [0.0, 0.0])), "goal"),
        safety_margin=float(doc.get("safety_margin", DEFAULT_SAFETY_MARGIN)),
        connectivity=connectivity,
        instruction=_parse_instruction(doc["instruction"]) if "instruction" in doc else None,
        answer_key=doc.get("answer_key"),
        ground_truth=doc.get("ground_truth"),
        human_start=_parse_point(doc["human_start"], "human_start") if "human_start" in doc else None,
        robot_start=_parse_point(doc["robot_start"], "robot_start") if "robot_start" in doc else None,
        human_plans=doc.get("human_plans"),
        speeds=doc.get("speeds"),
        coordination=doc.get("coordination"),
    )
    _require(scene.safety_margin >= 0, "safety_margin must be >= 0")

    for label, p in (("start", scene.start), ("goal", scene.goal)):
        _require(grid.contains_point(p), f"{label} {p} outside grid bounds")
    raster = rasterize(scene)
    for label, p in (("start", scene.start), ("goal", scene.goal)):
        _require(grid.world_to_cell(p) not in raster.static,
                 f"{label} {p} is statically blocked")
    if scene.ground_truth is not None:
        for oid in scene.ground_truth:
            _require(oid in {o.id for o in objects},
                     f"ground_truth references unknown object '{oid}'")
    return scene


def load_scenario(path: str) -> SemanticScene:
    """Load, parse, and validate a scenario file."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"malformed scenario file {path}: {e}") from e
    return scene_from_json(doc)


def scene_to_json(scene: SemanticScene) -> dict:
    """Serialize a scene back to the scenario schema."""
    doc: dict = {
        "grid": {
            "origin": list(scene.grid.origin),
            "resolution": scene.grid.resolution,
            "width": scene.grid.width,
            "height": scene.grid.height,
        },
        "objects": [],
        "tasks": [],
        "start": list(scene.start),
        "goal": list(scene.goal),
        "safety_margin": scene.safety_margin,
    }
    if scene.grid.static_blocked:
        doc["grid"]["blocked_cells"] = sorted(list(c) for c in scene.grid.static_blocked)
    for o in scene.objects:
        trav = {"prior": o.prior} if o.is_uncertain else o.traversability
        doc["objects"].append({
            "id": o.id, "name": o.name,
            "aabb": {"min": [o.aabb.xmin, o.aabb.ymin], "max": [o.aabb.xmax, o.aabb.ymax]},
            "traversability": trav,
            "attributes": dict(o.attributes),
            "confidence": o.confidence,
        })
    for t in scene.tasks:
        doc["tasks"].append({"id": t.id, "position": list(t.position),
                             "kind": t.kind, "completion_radius": t.completion_radius})
    if scene.connectivity != 8:
        doc["connectivity"] = scene.connectivity
    if scene.instruction is not None:
        doc["instruction"] = {
            "text": scene.instruction.raw_text,
            "steps": [{"action": s.action, "target": s.target}
                      for s in scene.instruction.steps],
        }
    for key in ("answer_key", "ground_truth", "human_plans", "speeds", "coordination"):
        value = getattr(scene, key)
        if value is not None:
            doc[key] = value
    if scene.human_start is not None:
        doc["human_start"] = list(scene.human_start)
    if scene.robot_start is not None:
        doc["robot_start"] = list(scene.robot_start)
    return doc


def save_scenario(scene: SemanticScene, path: str) -> None:
    with open(path, "w") as f:
        json.dump(scene_to_json(scene), f, indent=2)


def with_known_traversability(scene: SemanticScene, known: dict) -> SemanticScene:
    """Fold known traversability bits into the scene.

    Objects in `known` flip from uncertain to passable/blocked; everything
    else is untouched. Used between legs once human answers (or a
    conservative assumption) pin an object down.
    """
    objects = []
    for o in scene.objects:
        if o.is_uncertain and o.id in known:
            objects.append(replace(o, traversability=PASSABLE if known[o.id] else BLOCKED,
                                   prior=None))
        else:
            objects.append(o)
    return replace(scene, objects=tuple(objects))
