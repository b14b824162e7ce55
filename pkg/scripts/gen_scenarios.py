#!/usr/bin/env python3
"""Author the bundled scenario corpus (deterministic; rerun to regenerate).

Writes the 25-scenario instructed-planning suite (20 simple, 5 complex),
the 4 collaboration layouts, suite index files, and the two live demos
into src/jointplan/data/.
"""

import json
import os

ROOT = os.path.join(os.path.dirname(__file__), "..", "src", "jointplan", "data")

RES = 0.5


def cell_box(ix, iy, pad=0.05):
    return {"min": [ix * RES + pad, iy * RES + pad],
            "max": [(ix + 1) * RES - pad, (iy + 1) * RES - pad]}


def center(ix, iy):
    return [(ix + 0.5) * RES, (iy + 0.5) * RES]


def vertical_wall(ix, rows, gaps):
    return [[ix, j] for j in rows if j not in gaps]


def obstacle(oid, ix, iy, prior, name=None, **attrs):
    return {"id": oid, "name": name or oid, "aabb": cell_box(ix, iy),
            "traversability": {"prior": prior}, "attributes": attrs,
            "confidence": round(0.3 + 0.1 * (hash(oid) % 5), 4)}


def passable_box(oid, x, y, w=0.4, h=0.4, name="box", **attrs):
    return {"id": oid, "name": name, "aabb": {"min": [x, y], "max": [x + w, y + h]},
            "traversability": "passable", "attributes": attrs, "confidence": 0.8}


def base_grid(width, height, blocked=None, origin=(0.0, 0.0)):
    g = {"origin": list(origin), "resolution": RES, "width": width, "height": height}
    if blocked:
        g["blocked_cells"] = sorted(blocked)
    return g


# --- simple obstacle scenarios ---------------------------------------------
# one vertical wall (or two), gaps carrying uncertain objects; a pruned
# object sits in a corner no candidate path visits


def simple_obstacle(name, *, gap_obj_prior, gt_gap, free_gap=True, pruned=1,
                    second_wall=False):
    width, height = 22, 12
    rows = range(height)
    gaps1 = {5, 9} if free_gap else {5}
    blocked = vertical_wall(10, rows, gaps1)
    objects = []
    ground_truth = {}
    if gap_obj_prior is not None:
        objects.append(obstacle("gap_a", 10, 5, gap_obj_prior))
        ground_truth["gap_a"] = gt_gap
    if second_wall:
        blocked += vertical_wall(15, rows, {5})
        objects.append(obstacle("gap_b", 15, 5, 0.5))
        ground_truth["gap_b"] = True
    for k in range(pruned):
        oid = f"corner_{k}"
        objects.append(obstacle(oid, 1 + k, height - 1, 0.5))
        ground_truth[oid] = False
    return {
        "grid": base_grid(width, height, blocked),
        "objects": objects,
        "tasks": [],
        "start": center(1, 5),
        "goal": center(20, 5),
        "safety_margin": 0.0,
        "ground_truth": ground_truth,
    }


# --- simple target scenarios ------------------------------------------------


def simple_target(name, *, description, boxes, answers=None, true_targets,
                  width=24, height=12, start=(0.75, 2.75)):
    doc = {
        "grid": base_grid(width, height),
        "objects": boxes,
        "tasks": [],
        "start": list(start),
        "goal": list(start),
        "safety_margin": 0.0,
        "instruction": {"text": f"Go to {description}.",
                        "steps": [{"action": "navigate", "target": description}]},
        "answer_key": {"true_targets": true_targets},
        "ground_truth": {},
    }
    if answers:
        doc["answer_key"]["answers"] = answers
    return doc


def build_mode1():
    scenarios = {}

    # -- 12 obstacle-only simple scenarios
    scenarios["so01"] = simple_obstacle("so01", gap_obj_prior=0.5, gt_gap=True)
    scenarios["so02"] = simple_obstacle("so02", gap_obj_prior=0.5, gt_gap=False)
    scenarios["so03"] = simple_obstacle("so03", gap_obj_prior=None, gt_gap=None,
                                        pruned=2)
    scenarios["so04"] = simple_obstacle("so04", gap_obj_prior=0.5, gt_gap=True,
                                        free_gap=False, second_wall=True)
    scenarios["so05"] = simple_obstacle("so05", gap_obj_prior=0.5, gt_gap=True,
                                        free_gap=False)
    scenarios["so06"] = simple_obstacle("so06", gap_obj_prior=0.3, gt_gap=False)
    scenarios["so07"] = simple_obstacle("so07", gap_obj_prior=0.7, gt_gap=True,
                                        pruned=2)
    scenarios["so08"] = simple_obstacle("so08", gap_obj_prior=0.5, gt_gap=True,
                                        free_gap=False, pruned=2)
    scenarios["so09"] = simple_obstacle("so09", gap_obj_prior=0.4, gt_gap=False,
                                        pruned=2)
    scenarios["so10"] = simple_obstacle("so10", gap_obj_prior=0.6, gt_gap=True)
    scenarios["so11"] = simple_obstacle("so11", gap_obj_prior=None, gt_gap=None,
                                        pruned=3)
    scenarios["so12"] = simple_obstacle("so12", gap_obj_prior=0.5, gt_gap=True,
                                        free_gap=False, second_wall=True, pruned=2)

    # -- 8 target-only simple scenarios
    # ambiguous pairs: the box nearest the start is the *wrong* one, so the
    # passive no-query pick fails while a single clarification succeeds
    scenarios["st01"] = simple_target(
        "st01", description="the box with medicine",
        boxes=[passable_box("box_a", 2.0, 2.0), passable_box("box_b", 8.0, 4.0)],
        answers={"the box with medicine": "box_b"}, true_targets=["box_b"])
    scenarios["st02"] = simple_target(
        "st02", description="the box with the radio",
        boxes=[passable_box("box_a", 1.5, 3.0), passable_box("box_b", 6.0, 1.0),
               passable_box("box_c", 9.0, 4.5)],
        answers={"the box with the radio": "box_c"}, true_targets=["box_c"])
    scenarios["st03"] = simple_target(
        "st03", description="the nearest box",
        boxes=[passable_box("box_a", 2.0, 2.5), passable_box("box_b", 9.0, 2.5)],
        true_targets=["box_a"])
    scenarios["st04"] = simple_target(
        "st04", description="the largest box",
        boxes=[passable_box("box_a", 2.0, 2.0, w=1.0, h=1.0),
               passable_box("box_b", 8.0, 4.0, w=0.5, h=1.0)],
        true_targets=["box_a"])
    scenarios["st05"] = simple_target(
        "st05", description="the black box",
        boxes=[passable_box("box_black", 7.0, 1.5, color="black"),
               passable_box("box_blue", 3.0, 4.0, color="blue")],
        true_targets=["box_black"])
    scenarios["st06"] = simple_target(
        "st06", description="the box with the bandage",
        boxes=[passable_box("box_a", 3.0, 1.0), passable_box("box_b", 7.5, 4.0)],
        answers={"the box with the bandage": "box_b"}, true_targets=["box_b"])
    scenarios["st07"] = simple_target(
        "st07", description="the smallest box",
        boxes=[passable_box("box_a", 2.5, 2.0, w=1.2, h=0.8),
               passable_box("box_b", 8.0, 3.0, w=0.3, h=0.3)],
        true_targets=["box_b"])
    scenarios["st08"] = simple_target(
        "st08", description="the blue box",
        boxes=[passable_box("box_blue", 8.5, 2.0, color="blue"),
               passable_box("box_black", 2.0, 3.5, color="black")],
        true_targets=["box_blue"])

    # -- 5 complex scenarios
    scenarios["cx01"] = three_corridor_triage()
    scenarios["cx02"] = real_world_replica()
    scenarios["cx03"] = ambiguous_plus_gap()
    scenarios["cx04"] = ambiguous_plus_two_walls()
    scenarios["cx05"] = tool_target_plus_parallel_gaps()
    return scenarios


def three_corridor_triage():
    """Three corridors at increasing detour cost: fire < smoke < net.

    The fire's low passable prior makes {fire, smoke} the optimal first
    query, deferring the net; the pocket object is off every candidate.
    """
    width, height = 30, 14
    blocked = vertical_wall(15, range(height), gaps={7, 10, 2})
    objects = [
        obstacle("fire", 15, 7, 0.2, name="fire"),
        obstacle("smoke", 15, 10, 0.95, name="smoke"),
        obstacle("net", 15, 2, 0.5, name="net"),
        obstacle("yellow_box", 2, 13, 0.5, name="yellow box", color="yellow"),
    ]
    return {
        "grid": base_grid(width, height, blocked),
        "objects": objects,
        "tasks": [],
        "start": center(1, 7),
        "goal": center(28, 7),
        "safety_margin": 0.0,
        "ground_truth": {"fire": False, "smoke": True, "net": True,
                         "yellow_box": False},
    }


def real_world_replica():
    """The 12 m x 6 m arena with the published object localizations.

    Start sits nearest the yellow box, so the passive pick goes there and
    fails; the net blocks the box-to-person leg while the yellow box stays
    off every candidate path.
    """
    objects = [
        {"id": "box_blue", "name": "blue box",
         "aabb": {"min": [7.39, -1.04], "max": [7.64, -0.68]},
         "traversability": "passable", "attributes": {"color": "blue"},
         "confidence": 0.8147},
        {"id": "box_black", "name": "black box",
         "aabb": {"min": [-0.02, -0.09], "max": [0.47, 0.30]},
         "traversability": "passable", "attributes": {"color": "black"},
         "confidence": 0.6342},
        {"id": "person", "name": "injured person",
         "aabb": {"min": [4.89, 0.58], "max": [6.53, 1.21]},
         "traversability": "passable", "attributes": {},
         "confidence": 0.5336},
        {"id": "box_yellow", "name": "yellow box",
         "aabb": {"min": [5.10, -1.30], "max": [5.70, -0.62]},
         "traversability": {"prior": 0.35}, "attributes": {"color": "yellow"},
         "confidence": 0.4644},
        {"id": "net", "name": "net",
         "aabb": {"min": [3.02, 0.49], "max": [3.66, 1.17]},
         "traversability": {"prior": 0.45}, "attributes": {},
         "confidence": 0.3371},
    ]
    return {
        "grid": {"origin": [-1.5, -3.0], "resolution": 0.25,
                 "width": 48, "height": 24},
        "objects": objects,
        "tasks": [],
        "start": [4.5, -2.5],
        "goal": [4.5, -2.5],
        "safety_margin": 0.25,
        "instruction": {
            "text": "Get the medicine from the box and deliver it to the person.",
            "steps": [{"action": "navigate", "target": "the box with medicine"},
                      {"action": "navigate", "target": "the injured person"}]},
        "answer_key": {"answers": {"the box with medicine": "box_black"},
                       "true_targets": ["box_black", "person"]},
        "ground_truth": {"box_yellow": False, "net": False},
    }


def ambiguous_plus_gap():
    """Ambiguous supply box + one uncertain gap crossed by both legs."""
    width, height = 26, 12
    blocked = vertical_wall(10, range(height), gaps={5})
    objects = [
        obstacle("gap_a", 10, 5, 0.5),
        obstacle("corner_0", 1, 11, 0.5),
        passable_box("box_a", 7.0, 1.0),   # right side, nearer goal-side
        passable_box("box_b", 9.5, 4.5),
        passable_box("person", 1.0, 4.5, name="injured person"),
    ]
    return {
        "grid": base_grid(width, height, blocked),
        "objects": objects,
        "tasks": [],
        "start": center(1, 5),
        "goal": center(1, 5),
        "safety_margin": 0.0,
        "instruction": {
            "text": "Bring the box with water to the injured person.",
            "steps": [{"action": "navigate", "target": "the box with water"},
                      {"action": "navigate", "target": "the injured person"}]},
        "answer_key": {"answers": {"the box with water": "box_b"},
                       "true_targets": ["box_b", "person"]},
        "ground_truth": {"gap_a": True, "corner_0": False},
    }


def ambiguous_plus_two_walls():
    """Ambiguous box behind two single-gap walls: batch query, one event."""
    width, height = 26, 12
    blocked = vertical_wall(8, range(height), gaps={5}) + \
        vertical_wall(15, range(height), gaps={5})
    objects = [
        obstacle("gap_a", 8, 5, 0.5),
        obstacle("gap_b", 15, 5, 0.5),
        obstacle("corner_0", 1, 11, 0.5),
        passable_box("box_a", 10.5, 1.0),
        passable_box("box_b", 11.5, 4.5),
    ]
    return {
        "grid": base_grid(width, height, blocked),
        "objects": objects,
        "tasks": [],
        "start": center(1, 5),
        "goal": center(1, 5),
        "safety_margin": 0.0,
        "instruction": {
            "text": "Fetch the box with flares.",
            "steps": [{"action": "navigate", "target": "the box with flares"}]},
        "answer_key": {"answers": {"the box with flares": "box_b"},
                       "true_targets": ["box_b"]},
        "ground_truth": {"gap_a": True, "gap_b": True, "corner_0": False},
    }


def tool_target_plus_parallel_gaps():
    """Tool-resolvable target + two parallel uncertain gaps, no free route."""
    width, height = 24, 12
    blocked = vertical_wall(10, range(height), gaps={5, 9})
    # nearest box to the start is the true one: tool resolves, zero queries;
    # both boxes sit beyond the wall so the leg must pick a gap
    objects = [
        obstacle("gap_a", 10, 5, 0.5),
        obstacle("gap_b", 10, 9, 0.5),
        obstacle("corner_0", 22, 0, 0.5),
        passable_box("box_a", 7.0, 2.5),
        passable_box("box_b", 10.7, 2.5),
    ]
    return {
        "grid": base_grid(width, height, blocked),
        "objects": objects,
        "tasks": [],
        "start": center(1, 5),
        "goal": center(1, 5),
        "safety_margin": 0.0,
        "instruction": {
            "text": "Reach the nearest box.",
            "steps": [{"action": "navigate", "target": "the nearest box"}]},
        "answer_key": {"true_targets": ["box_a"]},
        "ground_truth": {"gap_a": True, "gap_b": False, "corner_0": False},
    }


# --- mode-2 layouts ---------------------------------------------------------


def layout(name, *, origin, width, height, tasks, human_start, robot_start,
           plans, r_commit=1.5):
    return {
        "grid": {"origin": list(origin), "resolution": RES,
                 "width": width, "height": height},
        "objects": [],
        "tasks": tasks,
        "start": list(human_start),
        "goal": list(robot_start),
        "safety_margin": 0.0,
        "human_start": list(human_start),
        "robot_start": list(robot_start),
        "human_plans": plans,
        "speeds": {"human": 1.0, "robot": 1.0},
        "coordination": {"tau_intent": 0.5, "r_commit": r_commit,
                         "wait_timeout": 5.0},
    }


def task(tid, x, y, kind="independent", radius=0.5):
    return {"id": tid, "position": [x, y], "kind": kind,
            "completion_radius": radius}


def build_mode2():
    layouts = {}
    layouts["l1_split"] = layout(
        "l1_split", origin=(0, 0), width=40, height=40,
        tasks=[task("a", 5, 14), task("b", 16, 6), task("c", 10, 2, "cooperative")],
        human_start=(2, 10), robot_start=(12, 5),
        plans={"rational_a": ["a", "b", "c"], "rational_b": ["b", "a", "c"]})
    layouts["l2_bait"] = layout(
        "l2_bait", origin=(0, -4), width=32, height=24,
        tasks=[task("a", 3, 3), task("b", 9, 4), task("c", 13, -1, "cooperative")],
        human_start=(0.5, 3), robot_start=(5.8, 3.4),
        plans={"rational_a": ["a", "b", "c"], "rational_b": ["b", "a", "c"]})
    layouts["l3_spread"] = layout(
        "l3_spread", origin=(0, 0), width=40, height=24,
        tasks=[task("a", 4, 9), task("b", 11, 4), task("c", 16, 8, "cooperative")],
        human_start=(1, 6), robot_start=(14, 7),
        plans={"rational_a": ["a", "b", "c"], "rational_b": ["b", "a", "c"]})
    layouts["l4_dense"] = layout(
        "l4_dense", origin=(-1.5, -3.0), width=24, height=12,
        tasks=[task("black_box", 0.225, 0.105), task("blue_box", 7.515, -0.86),
               task("person", 5.71, 0.895, "cooperative")],
        human_start=(-1.0, -2.0), robot_start=(4.6, -1.1),
        plans={"rational_a": ["black_box", "blue_box", "person"],
               "rational_b": ["blue_box", "black_box", "person"]},
        r_commit=1.0)
    return layouts


def build_demos():
    demo1 = ambiguous_plus_gap()
    demo2 = build_mode2()["l1_split"]
    return {"demo_mode1": demo1, "demo_mode2": demo2}


def main():
    mode1 = build_mode1()
    mode2 = build_mode2()
    demos = build_demos()
    for sub in ("mode1", "mode2", "demo"):
        os.makedirs(os.path.join(ROOT, sub), exist_ok=True)
    for name, doc in mode1.items():
        with open(os.path.join(ROOT, "mode1", f"{name}.json"), "w") as f:
            json.dump(doc, f, indent=1)
    for name, doc in mode2.items():
        with open(os.path.join(ROOT, "mode2", f"{name}.json"), "w") as f:
            json.dump(doc, f, indent=1)
    for name, doc in demos.items():
        with open(os.path.join(ROOT, "demo", f"{name}.json"), "w") as f:
            json.dump(doc, f, indent=1)

    suite1 = {
        "mode": "mode1",
        "strategies": ["optimal", "exhaustive", "none"],
        "scenarios": [f"mode1/{name}.json" for name in sorted(mode1)],
        "simple": sorted(n for n in mode1 if not n.startswith("cx")),
        "complex": sorted(n for n in mode1 if n.startswith("cx")),
    }
    suite2 = {
        "mode": "mode2",
        "layouts": [f"mode2/{name}.json" for name in sorted(mode2)],
        "behaviors": ["rational_a", "rational_b", "ambiguous"],
        "policies": ["intent", "nearest"],
        "seeds": [101, 202],
    }
    with open(os.path.join(ROOT, "mode1", "suite.json"), "w") as f:
        json.dump(suite1, f, indent=1)
    with open(os.path.join(ROOT, "mode2", "suite.json"), "w") as f:
        json.dump(suite2, f, indent=1)
    print(f"wrote {len(mode1)} mode-1 scenarios, {len(mode2)} layouts, "
          f"{len(demos)} demos")


if __name__ == "__main__":
    main()
