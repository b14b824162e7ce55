import json

import numpy as np
import pytest

from jointplan.world import (
    AABB,
    GridMap,
    OutOfBoundsError,
    ScenarioError,
    SemanticScene,
    SceneObject,
    load_scenario,
    rasterize,
    scene_from_json,
    scene_to_json,
)


def make_scene(objects=(), tasks=(), width=10, height=10, resolution=0.5,
               margin=0.0, start=(0.25, 0.25), goal=(4.25, 4.25), **kw):
    grid = GridMap(origin=(0.0, 0.0), resolution=resolution, width=width, height=height)
    return SemanticScene(grid=grid, objects=tuple(objects), tasks=tuple(tasks),
                         start=start, goal=goal, safety_margin=margin, **kw)


def uncertain_box(oid, xmin, ymin, xmax, ymax, prior=0.5, **attrs):
    return SceneObject(id=oid, name=oid, aabb=AABB(xmin, ymin, xmax, ymax),
                       traversability="uncertain", prior=prior, attributes=attrs)


class TestGridMath:
    def test_world_to_cell_floor(self):
        grid = GridMap(origin=(0.0, 0.0), resolution=0.5, width=10, height=10)
        assert grid.world_to_cell((1.2, 0.3)) == (2, 0)

    def test_origin_maps_to_cell_zero(self):
        grid = GridMap(origin=(0.0, 0.0), resolution=0.5, width=10, height=10)
        assert grid.world_to_cell((0.0, 0.0)) == (0, 0)

    def test_out_of_bounds_raises(self):
        grid = GridMap(origin=(0.0, 0.0), resolution=0.5, width=10, height=10)
        with pytest.raises(OutOfBoundsError):
            grid.world_to_cell((5.1, 0.0))
        with pytest.raises(OutOfBoundsError):
            grid.world_to_cell((-0.1, 0.0))

    def test_round_trip_all_cells(self):
        grid = GridMap(origin=(-2.0, 1.0), resolution=0.3, width=7, height=5)
        for i in range(grid.width):
            for j in range(grid.height):
                assert grid.world_to_cell(grid.cell_to_world((i, j))) == (i, j)


class TestRasterize:
    def test_single_cell_box(self):
        # interval arithmetic: [1.0,1.4] at res 0.5 covers only cell index 2
        scene = make_scene([uncertain_box("o1", 1.0, 1.0, 1.4, 1.4)])
        raster = rasterize(scene)
        assert raster.uncertain["o1"] == frozenset({(2, 2)})

    def test_degenerate_point_box(self):
        scene = make_scene([uncertain_box("o1", 1.25, 1.25, 1.25, 1.25)])
        raster = rasterize(scene)
        assert raster.uncertain["o1"] == frozenset({(2, 2)})

    def test_margin_inflates_to_block(self):
        scene = make_scene([uncertain_box("o1", 1.0, 1.0, 1.4, 1.4)], margin=0.5)
        raster = rasterize(scene)
        expected = frozenset((i, j) for i in (1, 2, 3) for j in (1, 2, 3))
        assert raster.uncertain["o1"] == expected

    def test_blocked_object_goes_static(self):
        obj = SceneObject(id="wall", name="wall", aabb=AABB(1.0, 1.0, 1.4, 1.4),
                          traversability="blocked")
        raster = rasterize(make_scene([obj]))
        assert raster.static == frozenset({(2, 2)})
        assert raster.uncertain == {}

    def test_out_of_bounds_object_clips_silently(self):
        scene = make_scene([uncertain_box("o1", 40.0, 40.0, 41.0, 41.0)])
        assert rasterize(scene).uncertain["o1"] == frozenset()

    def test_monotone_in_margin(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            xmin, ymin = rng.uniform(0, 3, size=2)
            w, h = rng.uniform(0, 2, size=2)
            box = uncertain_box("o1", xmin, ymin, xmin + w, ymin + h)
            m1, m2 = sorted(rng.uniform(0, 1, size=2))
            small = rasterize(make_scene([box], margin=m1)).uncertain["o1"]
            large = rasterize(make_scene([box], margin=m2)).uncertain["o1"]
            assert small <= large


def scenario_doc():
    return {
        "grid": {"origin": [0.0, 0.0], "resolution": 0.5, "width": 20, "height": 10},
        "objects": [
            {"id": "box_blue", "name": "blue box",
             "aabb": {"min": [7.39, 1.96], "max": [7.64, 2.32]},
             "traversability": "passable",
             "attributes": {"color": "blue"}, "confidence": 0.8147},
            {"id": "net", "name": "net",
             "aabb": {"min": [3.02, 2.49], "max": [3.66, 3.17]},
             "traversability": {"prior": 0.5},
             "attributes": {}, "confidence": 0.3371},
        ],
        "tasks": [
            {"id": "t1", "position": [2.0, 2.0], "kind": "independent",
             "completion_radius": 0.5},
        ],
        "start": [0.25, 0.25],
        "goal": [9.25, 4.25],
        "safety_margin": 0.0,
    }


class TestScenarioIO:
    def test_load_table_values(self, tmp_path):
        # the blue-box localization from the bundled real-world replica
        path = tmp_path / "s.json"
        path.write_text(json.dumps(scenario_doc()))
        scene = load_scenario(str(path))
        blue = scene.object_by_id("box_blue")
        assert blue.aabb == AABB(7.39, 1.96, 7.64, 2.32)
        assert blue.confidence == pytest.approx(0.8147)
        net = scene.object_by_id("net")
        assert net.is_uncertain and net.prior == 0.5

    def test_minimal_scene(self):
        doc = {"grid": {"origin": [0, 0], "resolution": 1.0, "width": 1, "height": 1},
               "objects": [], "tasks": [], "start": [0.5, 0.5], "goal": [0.5, 0.5]}
        scene = scene_from_json(doc)
        assert scene.grid.width == 1 and not scene.objects and not scene.tasks

    def test_duplicate_object_id_names_offender(self):
        doc = scenario_doc()
        doc["objects"].append(dict(doc["objects"][0]))
        with pytest.raises(ScenarioError, match="box_blue"):
            scene_from_json(doc)

    def test_prior_outside_open_interval(self):
        doc = scenario_doc()
        doc["objects"][1]["traversability"] = {"prior": 1.0}
        with pytest.raises(ScenarioError, match="net"):
            scene_from_json(doc)

    def test_start_out_of_bounds(self):
        doc = scenario_doc()
        doc["start"] = [99.0, 0.0]
        with pytest.raises(ScenarioError, match="start"):
            scene_from_json(doc)

    def test_start_on_blocked_cell(self):
        doc = scenario_doc()
        doc["objects"][0]["traversability"] = "blocked"
        doc["start"] = [7.5, 2.1]
        with pytest.raises(ScenarioError, match="blocked"):
            scene_from_json(doc)

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioError, match="malformed"):
            load_scenario(str(path))

    def test_round_trip_identity(self):
        doc = scenario_doc()
        doc["instruction"] = {"text": "go to the blue box",
                              "steps": [{"action": "navigate", "target": "blue box"}]}
        doc["ground_truth"] = {"net": True}
        scene = scene_from_json(doc)
        again = scene_from_json(scene_to_json(scene))
        assert again == scene
