"""Live session server: NDJSON over TCP, same messages over WebSocket.

A session is a sans-IO state machine (`Session`): messages in, messages
out, plus a tick() for the collaboration mode. The asyncio server wraps one
session per connection, sniffing the first bytes to speak either
newline-delimited JSON or WebSocket framing (for browsers) on one port.

Server-to-client messages carry a per-session monotonically increasing
`seq`; answers reference the seq of their query via `in_reply_to` and are
accepted exactly once.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import json
import math
import struct
from dataclasses import dataclass

from .coordination import AgentState, CoordinationParams, baseline_nearest, select_action
from .grounding import KnowledgeBase, TargetResolver, score_candidates
from .intent import HumanTrace, IntentParams, initial_belief, top_candidate, update_belief
from .policy import BeliefState, CostParams, apply_answers, next_query, solve_policy
from .search import NoPathUnderAnyHypothesis, build_decision_tree, plan_with_hypotheses
from .sim import _goal_point
from .world import COOPERATIVE, SemanticScene, rasterize, scene_to_json, with_known_traversability

MESSAGE_KINDS = frozenset({
    "scenario_loaded", "state_update", "belief_update", "robot_decision",
    "query_target", "answer_target", "query_traversability",
    "answer_traversability", "human_move", "episode_end", "error",
})

CLIENT_KINDS = frozenset({"answer_target", "answer_traversability", "human_move"})


class ProtocolError(ValueError):
    """Client message rejected; the session state is unchanged."""


def encode_message(msg: dict) -> bytes:
    return (json.dumps(msg, separators=(",", ":")) + "\n").encode("utf-8")


def decode_message(line: bytes | str) -> dict:
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"malformed message: {e}") from e
    if not isinstance(msg, dict) or msg.get("kind") not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind {msg.get('kind')!r}"
                            if isinstance(msg, dict) else "message must be an object")
    return msg


@dataclass
class _Leg:
    goal: tuple
    catalog: object = None
    policy: object = None
    belief: object = None


class Session:
    """One episode driven over the message protocol.

    Mode 1 walks grounding questions then traversability queries until the
    final path; mode 2 ticks the collaboration loop, consuming human_move
    messages. At most one query is pending at a time.
    """

    def __init__(self, scene: SemanticScene, mode: str, session_id: str = "s0", *,
                 costs: CostParams | None = None, tau: float = 0.5,
                 intent_params: IntentParams | None = None,
                 coord_params: CoordinationParams | None = None,
                 tick_dt: float = 0.1, robot_speed: float | None = None,
                 robot_policy: str = "intent"):
        if mode not in ("mode1", "mode2"):
            raise ValueError(f"unknown mode '{mode}'")
        if robot_policy not in ("intent", "nearest"):
            raise ValueError(f"unknown robot policy '{robot_policy}'")
        self.robot_policy = robot_policy
        self.id = session_id
        self.scene = scene
        self.mode = mode
        self.done = False
        self.outcome: str | None = None
        self._seq = 0
        self._pending: tuple | None = None  # (kind, seq, context)
        self._answered: set[int] = set()

        if mode == "mode1":
            self._costs = costs or CostParams()
            self._tau = tau
            self._kb = KnowledgeBase()
            self._raster = rasterize(scene)
            self._steps = list(scene.instruction.navigation_steps) \
                if scene.instruction else []
            self._resolver: TargetResolver | None = None
            self._targets: list[str] = []
            self._known: dict[str, bool] = {}
            self._position = scene.start
            self._legs: list[_Leg] = []
            self._leg_index = 0
            self._leg: _Leg | None = None
            self._waypoints: list = []
        else:
            speeds = scene.speeds or {}
            self._dt = tick_dt
            self._tick = 0
            self._human_speed = float(speeds.get("human", 1.0))
            self._robot_speed = robot_speed if robot_speed is not None \
                else float(speeds.get("robot", 1.0))
            self._intent_params = intent_params or IntentParams()
            self._coord_params = coord_params or CoordinationParams(
                **(scene.coordination or {}))
            self._human = scene.human_start if scene.human_start else scene.start
            self._staged_human: tuple | None = None
            self._robot = AgentState(
                position=scene.robot_start if scene.robot_start else scene.goal)
            self._completed: set = set()
            self._belief = initial_belief(scene.tasks)

    # -- outbound helpers

    def _emit(self, kind: str, **payload) -> dict:
        self._seq += 1
        return {"kind": kind, "seq": self._seq, **payload}

    def _error(self, message: str) -> dict:
        return self._emit("error", code="protocol_error", message=message)

    def start(self) -> list[dict]:
        scene_doc = scene_to_json(self.scene)
        # the client renders the scene but must not see the answer key or
        # the ground truth: the human is the oracle in a live session
        scene_doc.pop("answer_key", None)
        scene_doc.pop("ground_truth", None)
        out = [self._emit("scenario_loaded", mode=self.mode, scene=scene_doc)]
        if self.mode == "mode1":
            out.extend(self._advance_mode1_guarded())
        return out

    def _advance_mode1_guarded(self) -> list[dict]:
        try:
            return self._advance_mode1()
        except Exception as e:  # grounding/planning failed: end, don't crash
            return [self._error(f"planning failed: {e}"), self._finish("failure")]

    # -- inbound dispatch

    def handle(self, msg: dict) -> list[dict]:
        kind = msg.get("kind")
        if kind not in CLIENT_KINDS:
            return [self._error(f"clients cannot send '{kind}'")]
        try:
            if kind == "human_move":
                return self._handle_human_move(msg)
            return self._handle_answer(msg)
        except ProtocolError as e:
            return [self._error(str(e))]

    def _handle_human_move(self, msg: dict) -> list[dict]:
        if self.mode != "mode2":
            raise ProtocolError("human_move is only valid in mode2 sessions")
        pos = msg.get("pos")
        if (not isinstance(pos, (list, tuple)) or len(pos) != 2
                or not all(isinstance(v, (int, float)) for v in pos)):
            raise ProtocolError("human_move needs pos: [x, y]")
        grid = self.scene.grid
        ox, oy = grid.origin
        x = min(max(float(pos[0]), ox), ox + grid.width * grid.resolution - 1e-9)
        y = min(max(float(pos[1]), oy), oy + grid.height * grid.resolution - 1e-9)
        self._staged_human = (x, y)  # sampled at the next tick, last write wins
        return []

    def _handle_answer(self, msg: dict) -> list[dict]:
        if self.mode != "mode1":
            raise ProtocolError("answers are only valid in mode1 sessions")
        ref = msg.get("in_reply_to")
        if ref in self._answered:
            raise ProtocolError(f"query seq {ref} was already answered")
        if self._pending is None:
            raise ProtocolError("no query is pending")
        pkind, pseq, context = self._pending
        if ref != pseq:
            raise ProtocolError(f"in_reply_to {ref} does not match pending query {pseq}")
        if msg["kind"] == "answer_target":
            if pkind != "target":
                raise ProtocolError("pending query expects answer_traversability")
            answer = msg.get("answer")
            if answer not in context:
                raise ProtocolError(f"'{answer}' is not one of the offered options")
            self._resolver.answer(answer)
        else:
            if pkind != "trav":
                raise ProtocolError("pending query expects answer_target")
            answers = msg.get("answers")
            if not isinstance(answers, dict) or set(answers) != set(context):
                raise ProtocolError(f"answers must cover exactly {sorted(context)}")
            bits = {oid: bool(v) for oid, v in answers.items()}
            self._leg.belief = apply_answers(self._leg.policy.tree, self._leg.belief,
                                             bits)
            self._known.update(bits)
        self._answered.add(pseq)
        self._pending = None
        return self._advance_mode1_guarded()

    # -- mode 1 machine

    def _advance_mode1(self) -> list[dict]:
        out: list[dict] = []
        while not self.done and self._pending is None:
            if self._resolver is None and self._steps:
                step = self._steps.pop(0)
                cset = score_candidates(step.target, self.scene, self._kb,
                                        tau=self._tau)
                self._resolver = TargetResolver(description=step.target,
                                                scene=self.scene, kb=self._kb,
                                                cset=cset)
            if self._resolver is not None:
                result = self._resolver.advance()
                if result[0] == "ask":
                    msg = self._emit("query_target", question=result[1],
                                     options=list(result[2]),
                                     description=self._resolver.description)
                    self._pending = ("target", msg["seq"], tuple(result[2]))
                    out.append(msg)
                    return out
                self._targets.append(result[1])
                self._resolver = None
                if self._steps:
                    continue
                goals = [_goal_point(self.scene, self._raster, oid)
                         for oid in self._targets]
                self._legs = [_Leg(goal=g) for g in goals]
                continue
            if not self._legs:
                self._legs = [_Leg(goal=self.scene.goal)]
            if self._leg_index < len(self._legs):
                leg = self._legs[self._leg_index]
                self._leg = leg
                if leg.policy is None:
                    leg_scene = with_known_traversability(self.scene, self._known)
                    try:
                        leg.catalog = plan_with_hypotheses(
                            leg_scene, raster=rasterize(leg_scene),
                            start=self._position, goal=leg.goal)
                    except NoPathUnderAnyHypothesis:
                        out.append(self._finish("infeasible"))
                        return out
                    tree = build_decision_tree(leg.catalog)
                    priors = {o.id: o.prior for o in leg_scene.uncertain_objects
                              if o.id in tree.relevant_ids}
                    leg.policy = solve_policy(tree, priors, self._costs)
                    leg.belief = BeliefState.all_unknown(tree.n)
                step = next_query(leg.policy, leg.belief)
                if step.kind == "query":
                    msg = self._emit("query_traversability",
                                     objects=list(step.query))
                    self._pending = ("trav", msg["seq"], tuple(step.query))
                    out.append(msg)
                    return out
                if step.kind == "infeasible":
                    out.append(self._finish("infeasible"))
                    return out
                chosen = leg.catalog.paths[step.path_index]
                for cell in chosen.waypoints:
                    p = self.scene.grid.cell_to_world(cell)
                    if not self._waypoints or self._waypoints[-1] != p:
                        self._waypoints.append(p)
                self._position = self.scene.grid.cell_to_world(chosen.waypoints[-1])
                self._leg_index += 1
                continue
            out.append(self._emit("state_update", t=0.0,
                                  path=[list(p) for p in self._waypoints],
                                  completed=[]))
            out.append(self._finish("planned"))
        return out

    def _finish(self, outcome: str) -> dict:
        self.done = True
        self.outcome = outcome
        payload = {"outcome": outcome}
        if self.mode == "mode1":
            payload["targets"] = list(self._targets)
        return self._emit("episode_end", **payload)

    # -- mode 2 machine

    def tick(self) -> list[dict]:
        """Advance one simulation step; returns the telemetry messages."""
        if self.mode != "mode2" or self.done:
            return []
        self._tick += 1
        now = self._tick * self._dt
        tasks = list(self.scene.tasks)
        remaining = [t for t in tasks if t.id not in self._completed]
        if not remaining:
            return [self._finish("completed")]

        prev = self._human
        if self._staged_human is not None:
            self._human = self._staged_human
            self._staged_human = None
        self._belief = update_belief(self._belief, HumanTrace(prev, self._human),
                                     remaining, self._intent_params)

        if self.robot_policy == "nearest":
            decision = baseline_nearest(self._robot, remaining)
        else:
            decision = select_action(self._robot, self._belief, remaining,
                                     self._coord_params, now,
                                     human_position=self._human)
        self._robot.current_target = decision.target
        if decision.mode == "wait_at_target":
            if self._robot.waiting_since is None:
                self._robot.waiting_since = now
        else:
            self._robot.waiting_since = None
            target = next(t for t in remaining if t.id == decision.target)
            self._robot.position = _move(self._robot.position, target.position,
                                         self._robot_speed * self._dt)

        for task in remaining:
            h_in = math.dist(self._human, task.position) <= task.completion_radius
            r_in = math.dist(self._robot.position, task.position) <= task.completion_radius
            done = (h_in and r_in) if task.kind == COOPERATIVE else (h_in or r_in)
            if done:
                self._completed.add(task.id)

        top_id, rho = top_candidate(self._belief)
        out = [
            self._emit("state_update", t=round(now, 6),
                       human=[self._human[0], self._human[1]],
                       robot=[self._robot.position[0], self._robot.position[1]],
                       completed=sorted(self._completed)),
            self._emit("belief_update",
                       probs={k: round(v, 6) for k, v in self._belief.probs.items()},
                       top=top_id, rho=round(rho, 6)),
            self._emit("robot_decision", target=decision.target, mode=decision.mode),
        ]
        if len(self._completed) == len(tasks):
            out.append(self._finish("completed"))
        return out


def _move(position, target, max_step):
    dx, dy = target[0] - position[0], target[1] - position[1]
    dist = math.hypot(dx, dy)
    if dist <= 1e-12:
        return position
    step = min(max_step, dist)
    return (position[0] + step * dx / dist, position[1] + step * dy / dist)


# ---------------------------------------------------------------------------
# transports: NDJSON lines and WebSocket frames over one port

_WS_MAGIC = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class _LineTransport:
    def __init__(self, reader, writer, leftover: bytes = b""):
        self.reader = reader
        self.writer = writer
        self._buffer = leftover

    async def send(self, msg: dict):
        self.writer.write(encode_message(msg))
        await self.writer.drain()

    async def recv(self) -> dict | None:
        while True:
            if b"\n" in self._buffer:
                line, self._buffer = self._buffer.split(b"\n", 1)
                if line.strip():
                    return decode_message(line)
                continue
            chunk = await self.reader.read(65536)
            if not chunk:
                return None
            self._buffer += chunk


class _WebSocketTransport:
    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer
        self._buffer = b""  # bytes that arrived bundled with the handshake

    async def handshake(self, first: bytes):
        data = first
        while b"\r\n\r\n" not in data:
            chunk = await self.reader.read(1024)
            if not chunk:
                raise ConnectionError("websocket handshake truncated")
            data += chunk
        head, _, self._buffer = data.partition(b"\r\n\r\n")
        headers = {}
        for raw in head.split(b"\r\n")[1:]:
            if b":" in raw:
                k, v = raw.split(b":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get(b"sec-websocket-key")
        if key is None:
            raise ConnectionError("missing Sec-WebSocket-Key")
        accept = base64.b64encode(
            hashlib.sha1(key + _WS_MAGIC.encode()).digest()).decode()
        self.writer.write((
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode())
        await self.writer.drain()

    async def send(self, msg: dict):
        payload = json.dumps(msg, separators=(",", ":")).encode("utf-8")
        header = bytearray([0x81])
        n = len(payload)
        if n < 126:
            header.append(n)
        elif n < 2 ** 16:
            header.append(126)
            header += struct.pack(">H", n)
        else:
            header.append(127)
            header += struct.pack(">Q", n)
        self.writer.write(bytes(header) + payload)
        await self.writer.drain()

    async def _read_exact(self, n: int) -> bytes:
        while len(self._buffer) < n:
            chunk = await self.reader.read(65536)
            if not chunk:
                raise asyncio.IncompleteReadError(self._buffer, n)
            self._buffer += chunk
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    async def recv(self) -> dict | None:
        while True:
            try:
                head = await self._read_exact(2)
            except (asyncio.IncompleteReadError, ConnectionError):
                return None
            opcode = head[0] & 0x0F
            masked = head[1] & 0x80
            length = head[1] & 0x7F
            if length == 126:
                length = struct.unpack(">H", await self._read_exact(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", await self._read_exact(8))[0]
            mask = await self._read_exact(4) if masked else b"\x00" * 4
            payload = bytearray(await self._read_exact(length))
            if masked:
                for i in range(length):
                    payload[i] ^= mask[i % 4]
            if opcode == 0x8:  # close
                return None
            if opcode == 0x9:  # ping -> pong
                self.writer.write(b"\x8a" + bytes([len(payload)]) + bytes(payload))
                await self.writer.drain()
                continue
            if opcode in (0x1, 0x2):
                return decode_message(bytes(payload))


class SessionServer:
    """One session per connection; NDJSON and WebSocket on the same port."""

    def __init__(self, scene: SemanticScene, mode: str, *, tick_dt: float = 0.1,
                 robot_policy: str = "intent", log_path: str | None = None,
                 costs: CostParams | None = None):
        self.scene = scene
        self.mode = mode
        self.tick_dt = tick_dt
        self.robot_policy = robot_policy
        self.log_path = log_path
        self.costs = costs
        self._counter = 0
        self._server: asyncio.AbstractServer | None = None

    def _log(self, session_id: str, direction: str, msg: dict):
        if not self.log_path:
            return
        with open(self.log_path, "a") as f:
            f.write(json.dumps({"session": session_id, "dir": direction,
                                "msg": msg}) + "\n")

    async def _handle_conn(self, reader, writer):
        self._counter += 1
        sid = f"s{self._counter}"
        # sniff the framing: websocket clients open with an HTTP GET right
        # away; NDJSON clients may stay silent, so fall through on timeout
        try:
            first = await asyncio.wait_for(reader.read(4), timeout=0.25)
        except asyncio.TimeoutError:
            first = b""
        if first.startswith(b"GET"):
            transport = _WebSocketTransport(reader, writer)
            try:
                await transport.handshake(first)
            except ConnectionError:
                writer.close()
                return
        else:
            transport = _LineTransport(reader, writer, leftover=first)

        session = Session(self.scene, self.mode, session_id=sid,
                          tick_dt=self.tick_dt, costs=self.costs,
                          robot_policy=self.robot_policy)

        send_lock = asyncio.Lock()

        async def send_all(msgs):
            async with send_lock:
                for msg in msgs:
                    self._log(sid, "out", msg)
                    await transport.send(msg)

        try:
            await send_all(session.start())
        except (ConnectionResetError, BrokenPipeError):
            writer.close()
            return

        ticker = None
        if self.mode == "mode2":
            async def tick_loop():
                # absolute-deadline scheduling keeps the long-run rate at
                # exactly 1/tick_dt instead of drifting below it
                loop = asyncio.get_event_loop()
                next_at = loop.time()
                while not session.done:
                    next_at += self.tick_dt
                    delay = next_at - loop.time()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    try:
                        await send_all(session.tick())
                    except (ConnectionResetError, BrokenPipeError, OSError):
                        return
            ticker = asyncio.ensure_future(tick_loop())

        try:
            while True:
                try:
                    msg = await transport.recv()
                except ProtocolError as e:
                    await send_all([session._error(str(e))])
                    continue
                if msg is None:
                    break
                self._log(sid, "in", msg)
                await send_all(session.handle(msg))
        except (ConnectionResetError, BrokenPipeError, asyncio.IncompleteReadError,
                OSError):
            pass
        finally:
            if ticker:
                ticker.cancel()
            writer.close()

    async def start(self, host: str = "127.0.0.1", port: int = 8765):
        self._server = await asyncio.start_server(self._handle_conn, host, port)
        return self._server

    async def serve_forever(self, host: str = "127.0.0.1", port: int = 8765):
        server = await self.start(host, port)
        async with server:
            await server.serve_forever()
