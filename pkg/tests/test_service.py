import asyncio
import json

import pytest

from jointplan.service import (
    ProtocolError,
    Session,
    SessionServer,
    decode_message,
    encode_message,
)
from jointplan.suite import data_path
from jointplan.world import load_scenario

from test_search import cell_object, grid_scene


def mode1_scene():
    scene = grid_scene(5, 3, [cell_object("o1", [(2, 0), (2, 1)])],
                       start=(0, 1), goal=(4, 1), connectivity=4)
    return scene


SAMPLE_MESSAGES = [
    {"kind": "scenario_loaded", "seq": 1, "mode": "mode1", "scene": {"grid": {}}},
    {"kind": "state_update", "seq": 2, "t": 12.3, "human": [1.0, 2.0],
     "robot": [3.0, 4.0], "completed": ["t2"], "path": [[0.0, 0.0], [1.0, 1.0]]},
    {"kind": "belief_update", "seq": 3, "probs": {"t1": 0.62, "t2": 0.38},
     "top": "t1", "rho": 0.62},
    {"kind": "robot_decision", "seq": 4, "target": "t2",
     "mode": "complement_independent"},
    {"kind": "query_target", "seq": 5, "question": "Which box?",
     "options": ["a", "b"], "description": "the box"},
    {"kind": "answer_target", "in_reply_to": 5, "answer": "a"},
    {"kind": "query_traversability", "seq": 7, "objects": ["net", "fire"]},
    {"kind": "answer_traversability", "in_reply_to": 7,
     "answers": {"net": True, "fire": False}},
    {"kind": "human_move", "pos": [1.5, -0.5]},
    {"kind": "episode_end", "seq": 9, "outcome": "planned", "targets": []},
    {"kind": "error", "seq": 10, "code": "protocol_error", "message": "nope"},
]


class TestCodec:
    def test_every_kind_round_trips(self):
        for msg in SAMPLE_MESSAGES:
            assert decode_message(encode_message(msg)) == msg

    def test_unknown_kind_rejected(self):
        with pytest.raises(ProtocolError):
            decode_message(b'{"kind":"teleport"}')

    def test_malformed_rejected(self):
        with pytest.raises(ProtocolError):
            decode_message(b"{oops")


class TestMode1Session:
    def test_query_then_path(self):
        session = Session(mode1_scene(), "mode1")
        out = session.start()
        assert out[0]["kind"] == "scenario_loaded"
        query = out[-1]
        assert query["kind"] == "query_traversability" and query["objects"] == ["o1"]

        out = session.handle({"kind": "answer_traversability",
                              "in_reply_to": query["seq"],
                              "answers": {"o1": True}})
        kinds = [m["kind"] for m in out]
        assert kinds == ["state_update", "episode_end"]
        assert session.done and session.outcome == "planned"
        # the resolved path is the short one through the passable object
        path = out[0]["path"]
        assert len(path) == 5

    def test_replayed_answer_rejected_without_state_change(self):
        session = Session(mode1_scene(), "mode1")
        query = session.start()[-1]
        first = session.handle({"kind": "answer_traversability",
                                "in_reply_to": query["seq"],
                                "answers": {"o1": True}})
        assert first[-1]["kind"] == "episode_end"
        replay = session.handle({"kind": "answer_traversability",
                                 "in_reply_to": query["seq"],
                                 "answers": {"o1": False}})
        assert len(replay) == 1 and replay[0]["kind"] == "error"
        assert session.outcome == "planned"

    def test_answer_without_pending_rejected(self):
        session = Session(grid_scene(4, 4, []), "mode1")
        out = session.start()
        assert out[-1]["kind"] == "episode_end"
        err = session.handle({"kind": "answer_traversability",
                              "in_reply_to": 99, "answers": {}})
        assert err[0]["kind"] == "error"

    def test_human_move_in_mode1_rejected(self):
        session = Session(mode1_scene(), "mode1")
        session.start()
        out = session.handle({"kind": "human_move", "pos": [1.0, 1.0]})
        assert out[0]["kind"] == "error"

    def test_wrong_in_reply_to_rejected(self):
        session = Session(mode1_scene(), "mode1")
        query = session.start()[-1]
        out = session.handle({"kind": "answer_traversability",
                              "in_reply_to": query["seq"] + 5,
                              "answers": {"o1": True}})
        assert out[0]["kind"] == "error"
        # the pending query is still answerable afterwards
        out = session.handle({"kind": "answer_traversability",
                              "in_reply_to": query["seq"],
                              "answers": {"o1": False}})
        assert out[-1]["kind"] == "episode_end"

    def test_grounding_query_flow(self):
        scene = load_scenario(data_path("demo/demo_mode1.json"))
        session = Session(scene, "mode1")
        out = session.start()
        target_q = out[-1]
        assert target_q["kind"] == "query_target"
        assert set(target_q["options"]) == {"box_a", "box_b"}
        out = session.handle({"kind": "answer_target",
                              "in_reply_to": target_q["seq"], "answer": "box_b"})
        trav_q = out[-1]
        assert trav_q["kind"] == "query_traversability"
        assert trav_q["objects"] == ["gap_a"]
        out = session.handle({"kind": "answer_traversability",
                              "in_reply_to": trav_q["seq"],
                              "answers": {"gap_a": True}})
        assert out[-1]["kind"] == "episode_end"
        assert out[-1]["outcome"] == "planned"
        assert out[-1]["targets"] == ["box_b", "person"]

    def test_seq_strictly_increasing(self):
        scene = load_scenario(data_path("demo/demo_mode1.json"))
        session = Session(scene, "mode1")
        msgs = session.start()
        q = msgs[-1]
        msgs += session.handle({"kind": "answer_target",
                                "in_reply_to": q["seq"], "answer": "box_a"})
        seqs = [m["seq"] for m in msgs]
        assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


class TestMode2Session:
    def test_tick_emits_telemetry(self):
        scene = load_scenario(data_path("mode2/l1_split.json"))
        session = Session(scene, "mode2")
        session.start()
        out = session.tick()
        kinds = [m["kind"] for m in out]
        assert kinds == ["state_update", "belief_update", "robot_decision"]
        assert abs(sum(out[1]["probs"].values()) - 1.0) < 1e-6

    def test_human_move_shifts_state(self):
        scene = load_scenario(data_path("mode2/l1_split.json"))
        session = Session(scene, "mode2")
        session.start()
        session.tick()
        session.handle({"kind": "human_move", "pos": [3.0, 10.0]})
        out = session.tick()
        assert out[0]["human"] == [3.0, 10.0]

    def test_clamps_out_of_bounds_moves(self):
        scene = load_scenario(data_path("mode2/l1_split.json"))
        session = Session(scene, "mode2")
        session.start()
        session.handle({"kind": "human_move", "pos": [-50.0, 999.0]})
        out = session.tick()
        x, y = out[0]["human"]
        assert 0.0 <= x <= 20.0 and 0.0 <= y <= 20.0

    def test_episode_end_when_tasks_complete(self):
        scene = load_scenario(data_path("mode2/l1_split.json"))
        session = Session(scene, "mode2")
        session.start()
        # teleport the human through all tasks; robot joins the cooperative one
        for pos in ([5.0, 14.0], [16.0, 6.0]):
            session.handle({"kind": "human_move", "pos": pos})
            session.tick()
        done = []
        for _ in range(400):
            session.handle({"kind": "human_move", "pos": [10.0, 2.0]})
            done = session.tick()
            if session.done:
                break
        assert session.done
        assert done[-1]["kind"] == "episode_end"
        assert done[-1]["outcome"] == "completed"


def drive_tcp_session(port, scene_path, mode, script):
    """Connect over TCP, run a scripted answer loop, return all messages."""

    async def run():
        scene = load_scenario(scene_path)
        server = SessionServer(scene, mode)
        srv = await server.start("127.0.0.1", port)
        received = []
        try:
            reader, writer = await asyncio.open_connection("127.0.0.1", port)
            while True:
                line = await asyncio.wait_for(reader.readline(), timeout=5.0)
                if not line:
                    break
                msg = json.loads(line)
                received.append(msg)
                if msg["kind"] == "episode_end":
                    break
                reply = script(msg)
                if reply is not None:
                    writer.write(encode_message(reply))
                    await writer.drain()
            writer.close()
        finally:
            srv.close()
            await srv.wait_closed()
        return received

    return asyncio.run(run())


class TestTcpServer:
    def test_scripted_mode1_session_over_socket(self, tmp_path):
        gt = {"gap_a": True, "corner_0": False}

        def script(msg):
            if msg["kind"] == "query_target":
                return {"kind": "answer_target", "in_reply_to": msg["seq"],
                        "answer": "box_b"}
            if msg["kind"] == "query_traversability":
                return {"kind": "answer_traversability", "in_reply_to": msg["seq"],
                        "answers": {oid: gt[oid] for oid in msg["objects"]}}
            return None

        msgs = drive_tcp_session(8931, data_path("mode1/cx03.json"), "mode1", script)
        kinds = [m["kind"] for m in msgs]
        assert kinds[0] == "scenario_loaded"
        assert kinds[-1] == "episode_end"
        assert "state_update" in kinds
        path = next(m for m in msgs if m["kind"] == "state_update")["path"]
        assert len(path) > 10

    def test_session_path_matches_cli_byte_for_byte(self, tmp_path, capsys):
        from jointplan.cli import main as cli_main

        gt = {"gap_a": True, "corner_0": False}
        gt_file = tmp_path / "gt.json"
        gt_file.write_text(json.dumps(gt))
        out_file = tmp_path / "result.json"
        code = cli_main(["plan", "--scenario", data_path("mode1/cx03.json"),
                         "--policy", "optimal", "--ground-truth", str(gt_file),
                         "--out", str(out_file)])
        assert code == 0
        cli_waypoints = json.loads(out_file.read_text())["waypoints"]

        def script(msg):
            if msg["kind"] == "query_target":
                return {"kind": "answer_target", "in_reply_to": msg["seq"],
                        "answer": "box_b"}
            if msg["kind"] == "query_traversability":
                return {"kind": "answer_traversability", "in_reply_to": msg["seq"],
                        "answers": {oid: gt[oid] for oid in msg["objects"]}}
            return None

        msgs = drive_tcp_session(8932, data_path("mode1/cx03.json"), "mode1", script)
        session_path = next(m for m in msgs if m["kind"] == "state_update")["path"]
        assert json.dumps(session_path) == json.dumps(cli_waypoints)


class TestAnswerValidation:
    def test_partial_traversability_answer_rejected(self):
        scene = load_scenario(data_path("mode1/so04.json"))
        session = Session(scene, "mode1")
        query = session.start()[-1]
        assert set(query["objects"]) == {"gap_a", "gap_b"}
        out = session.handle({"kind": "answer_traversability",
                              "in_reply_to": query["seq"],
                              "answers": {"gap_a": True}})
        assert out[0]["kind"] == "error"
        # full answer still accepted afterwards
        out = session.handle({"kind": "answer_traversability",
                              "in_reply_to": query["seq"],
                              "answers": {"gap_a": True, "gap_b": True}})
        assert out[-1]["kind"] == "episode_end"

    def test_answer_for_unoffered_target_rejected(self):
        scene = load_scenario(data_path("demo/demo_mode1.json"))
        session = Session(scene, "mode1")
        query = session.start()[-1]
        out = session.handle({"kind": "answer_target",
                              "in_reply_to": query["seq"], "answer": "box_zz"})
        assert out[0]["kind"] == "error"


class TestNearestPolicySession:
    def test_live_nearest_robot_ignores_belief(self):
        scene = load_scenario(data_path("mode2/l1_split.json"))
        session = Session(scene, "mode2", robot_policy="nearest")
        session.start()
        out = session.tick()
        decision = out[2]
        assert decision["kind"] == "robot_decision"
        assert decision["mode"] == "nearest_fallback"
        assert decision["target"] == "c"  # nearest task to the robot start
