import pytest

from jointplan.grounding import (
    CandidateSet,
    EmptyCandidateSet,
    InapplicableTool,
    KnowledgeBase,
    ToolAction,
    Unresolvable,
    apply_tool,
    ground_instruction,
    refine_target,
    score_candidates,
)
from jointplan.world import AABB, GridMap, Instruction, InstructionStep, SemanticScene, SceneObject


def box(oid, x, y, w=0.4, h=0.4, **attrs):
    return SceneObject(id=oid, name="box", aabb=AABB(x, y, x + w, y + h),
                       traversability="passable", attributes=attrs)


def scene_with(objects, start=(0.25, 0.25)):
    grid = GridMap(origin=(0.0, 0.0), resolution=0.5, width=24, height=24)
    return SemanticScene(grid=grid, objects=tuple(objects), tasks=(),
                         start=start, goal=start, safety_margin=0.0)


class TestScoring:
    def test_color_match_is_exact(self):
        scene = scene_with([box("box_black", 2, 2, color="black"),
                            box("box_blue", 4, 4, color="blue")])
        cset = score_candidates("black box", scene, KnowledgeBase())
        assert cset.ids == ("box_black",)

    def test_bare_description_ties_all(self):
        scene = scene_with([box("b1", 1, 1), box("b2", 2, 2), box("b3", 3, 3)])
        cset = score_candidates("the box", scene, KnowledgeBase(), tau=0.5)
        assert set(cset.ids) == {"b1", "b2", "b3"}
        assert all(s == 1.0 for _, s in cset.candidates)

    def test_empty_scene_raises(self):
        with pytest.raises(EmptyCandidateSet):
            score_candidates("box", scene_with([]), KnowledgeBase())

    def test_scores_at_least_tau(self):
        scene = scene_with([box("b1", 1, 1, color="black"),
                            SceneObject(id="net", name="net", aabb=AABB(5, 5, 6, 6),
                                        traversability="passable")])
        cset = score_candidates("black box", scene, KnowledgeBase(), tau=0.4)
        assert all(s >= 0.4 for _, s in cset.candidates)
        assert "net" not in cset.ids


class TestTools:
    def test_compare_size_largest(self):
        scene = scene_with([box("big", 1, 1, w=1.0, h=1.0),
                            box("small", 3, 3, w=0.5, h=1.0)])
        cset = score_candidates("largest box", scene, KnowledgeBase(), tau=0.3)
        out = apply_tool(ToolAction("compare_size"), cset, scene, KnowledgeBase(),
                         "largest box")
        assert out.ids == ("big",)

    def test_attribute_filter_color(self):
        scene = scene_with([box("blue", 1, 1, color="blue"),
                            box("black", 3, 3, color="black")])
        cset = CandidateSet(candidates=(("black", 1.0), ("blue", 1.0)), tau=0.5)
        out = apply_tool(ToolAction("attribute_filter"), cset, scene, KnowledgeBase(),
                         "blue box")
        assert out.ids == ("blue",)

    def test_compare_distance_needs_keyword(self):
        scene = scene_with([box("b1", 1, 1), box("b2", 3, 3)])
        cset = score_candidates("the box", scene, KnowledgeBase())
        with pytest.raises(InapplicableTool):
            apply_tool(ToolAction("compare_distance"), cset, scene, KnowledgeBase(),
                       "the box")

    def test_tool_never_grows_set(self):
        scene = scene_with([box("b1", 1, 1), box("b2", 3, 3)])
        cset = score_candidates("nearest box", scene, KnowledgeBase())
        out = apply_tool(ToolAction("compare_distance"), cset, scene, KnowledgeBase(),
                         "nearest box")
        assert set(out.ids) <= set(cset.ids)


class TestRefine:
    def test_singleton_returned_immediately(self):
        scene = scene_with([box("only", 1, 1)])
        cset = score_candidates("box", scene, KnowledgeBase())
        oid, _, queries = refine_target(cset, scene, KnowledgeBase(), "box")
        assert oid == "only" and queries == 0

    def test_nearest_box_resolved_without_human(self):
        # distances 2 m and 5 m from the start
        scene = scene_with([box("near", 2.0, 0.05), box("far", 5.0, 0.05)],
                           start=(0.05, 0.25))
        cset = score_candidates("nearest box", scene, KnowledgeBase())
        oid, _, queries = refine_target(cset, scene, KnowledgeBase(), "nearest box")
        assert oid == "near" and queries == 0

    def test_indistinguishable_boxes_ask_human(self):
        scene = scene_with([box("b1", 1, 1), box("b2", 3, 3)])
        kb = KnowledgeBase()
        cset = score_candidates("the box with medicine", scene, kb)
        asked = []

        def human(question, options, description):
            asked.append(question)
            assert "medicine" in question
            return "b2"

        oid, kb, queries = refine_target(cset, scene, kb, "the box with medicine",
                                         human=human)
        assert oid == "b2" and queries == 1 and len(asked) == 1
        assert any(src == "human" and val == "b2" for src, _, val in kb.facts)

    def test_kb_short_circuits_repeat_question(self):
        scene = scene_with([box("b1", 1, 1), box("b2", 3, 3)])
        kb = KnowledgeBase()
        calls = []

        def human(question, options, description):
            calls.append(question)
            return "b1"

        desc = "the box with medicine"
        cset = score_candidates(desc, scene, kb)
        refine_target(cset, scene, kb, desc, human=human)
        cset2 = score_candidates(desc, scene, kb)
        oid, _, queries = refine_target(cset2, scene, kb, desc, human=human)
        assert oid == "b1" and len(calls) == 1 and queries == 0

    def test_unresolvable_without_human(self):
        scene = scene_with([box("b1", 1, 1), box("b2", 3, 3)])
        cset = score_candidates("the box", scene, KnowledgeBase())
        with pytest.raises(Unresolvable):
            refine_target(cset, scene, KnowledgeBase(), "the box")

    def test_default_pick_takes_nearest(self):
        scene = scene_with([box("near", 1.0, 0.05), box("far", 6.0, 0.05)],
                           start=(0.05, 0.25))
        cset = score_candidates("the box", scene, KnowledgeBase())
        oid, _, queries = refine_target(cset, scene, KnowledgeBase(), "the box",
                                        default_pick=True)
        assert oid == "near" and queries == 0

    def test_monotone_shrinkage(self):
        scene = scene_with([box("b1", 1, 1, color="black"),
                            box("b2", 3, 3, color="black"),
                            box("b3", 5, 5, color="blue")])
        kb = KnowledgeBase()
        cset = score_candidates("nearest black box", scene, kb, tau=0.3)
        sizes = [len(cset)]
        for kind in ("attribute_filter", "compare_distance"):
            try:
                cset = apply_tool(ToolAction(kind), cset, scene, kb, "nearest black box")
            except InapplicableTool:
                pass
            sizes.append(len(cset))
        assert sizes == sorted(sizes, reverse=True)
        assert len(cset) == 1


class TestInstruction:
    def test_multi_step_resolution(self):
        scene = scene_with([box("box_black", 1, 1, color="black"),
                            box("box_blue", 4, 4, color="blue"),
                            SceneObject(id="person", name="injured person",
                                        aabb=AABB(8, 8, 8.6, 8.6),
                                        traversability="passable")])
        instr = Instruction(raw_text="deliver", steps=(
            InstructionStep("navigate", "the black box"),
            InstructionStep("navigate", "the injured person"),
        ))
        targets, queries = ground_instruction(instr, scene, KnowledgeBase())
        assert targets == ["box_black", "person"] and queries == 0


class TestRandomSelect:
    def test_disabled_by_default(self):
        scene = scene_with([box("b1", 1, 1), box("b2", 3, 3)])
        cset = score_candidates("the box", scene, KnowledgeBase())
        with pytest.raises(Unresolvable):
            refine_target(cset, scene, KnowledgeBase(), "the box")

    def test_enabled_with_rng_picks_deterministically(self):
        import numpy as np
        scene = scene_with([box("b1", 1, 1), box("b2", 3, 3)])
        picks = set()
        for _ in range(3):
            cset = score_candidates("the box", scene, KnowledgeBase())
            oid, _, _ = refine_target(cset, scene, KnowledgeBase(), "the box",
                                      rng=np.random.default_rng(5))
            picks.add(oid)
        assert len(picks) == 1 and picks <= {"b1", "b2"}
