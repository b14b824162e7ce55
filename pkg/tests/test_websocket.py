"""The browser-facing framing: same messages, WebSocket frames, same port."""

import asyncio
import base64
import json
import os
import struct

from jointplan.service import SessionServer
from jointplan.suite import data_path
from jointplan.world import load_scenario


async def ws_connect(reader, writer):
    key = base64.b64encode(os.urandom(16)).decode()
    writer.write((f"GET / HTTP/1.1\r\nHost: test\r\nUpgrade: websocket\r\n"
                  f"Connection: Upgrade\r\nSec-WebSocket-Key: {key}\r\n"
                  f"Sec-WebSocket-Version: 13\r\n\r\n").encode())
    await writer.drain()
    head = b""
    while b"\r\n\r\n" not in head:
        head += await reader.read(1024)
    assert b"101" in head.split(b"\r\n", 1)[0]
    return head.split(b"\r\n\r\n", 1)[1]


def ws_encode(payload: bytes) -> bytes:
    mask = os.urandom(4)
    header = bytearray([0x81])
    n = len(payload)
    if n < 126:
        header.append(0x80 | n)
    else:
        header.append(0x80 | 126)
        header += struct.pack(">H", n)
    masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return bytes(header) + mask + masked


class WsReader:
    def __init__(self, reader, leftover=b""):
        self.reader = reader
        self.buffer = leftover

    async def _need(self, n):
        while len(self.buffer) < n:
            chunk = await self.reader.read(65536)
            if not chunk:
                raise ConnectionError("closed")
            self.buffer += chunk
        out, self.buffer = self.buffer[:n], self.buffer[n:]
        return out

    async def frame(self) -> dict:
        head = await self._need(2)
        length = head[1] & 0x7F
        if length == 126:
            length = struct.unpack(">H", await self._need(2))[0]
        elif length == 127:
            length = struct.unpack(">Q", await self._need(8))[0]
        payload = await self._need(length)
        return json.loads(payload)


def test_websocket_session_round_trip():
    async def run():
        scene = load_scenario(data_path("mode1/so01.json"))
        server = SessionServer(scene, "mode1")
        srv = await server.start("127.0.0.1", 8941)
        try:
            reader, writer = await asyncio.open_connection("127.0.0.1", 8941)
            leftover = await ws_connect(reader, writer)
            ws = WsReader(reader, leftover)
            loaded = await asyncio.wait_for(ws.frame(), 5)
            assert loaded["kind"] == "scenario_loaded"
            query = await asyncio.wait_for(ws.frame(), 5)
            assert query["kind"] == "query_traversability"
            assert query["objects"] == ["gap_a"]
            answer = json.dumps({"kind": "answer_traversability",
                                 "in_reply_to": query["seq"],
                                 "answers": {"gap_a": True}}).encode()
            writer.write(ws_encode(answer))
            await writer.drain()
            state = await asyncio.wait_for(ws.frame(), 5)
            assert state["kind"] == "state_update" and len(state["path"]) == 20
            end = await asyncio.wait_for(ws.frame(), 5)
            assert end["kind"] == "episode_end" and end["outcome"] == "planned"
            writer.close()
        finally:
            srv.close()
            await srv.wait_closed()

    asyncio.run(run())


def test_websocket_and_ndjson_share_schema():
    async def run():
        scene = load_scenario(data_path("mode1/so01.json"))
        server = SessionServer(scene, "mode1")
        srv = await server.start("127.0.0.1", 8942)
        try:
            # NDJSON client
            r1, w1 = await asyncio.open_connection("127.0.0.1", 8942)
            line = await asyncio.wait_for(r1.readline(), 5)
            ndjson_loaded = json.loads(line)
            w1.close()
            # WebSocket client
            r2, w2 = await asyncio.open_connection("127.0.0.1", 8942)
            leftover = await ws_connect(r2, w2)
            ws_loaded = await asyncio.wait_for(WsReader(r2, leftover).frame(), 5)
            w2.close()
            assert ndjson_loaded["kind"] == ws_loaded["kind"] == "scenario_loaded"
            assert ndjson_loaded["scene"] == ws_loaded["scene"]
        finally:
            srv.close()
            await srv.wait_closed()

    asyncio.run(run())
