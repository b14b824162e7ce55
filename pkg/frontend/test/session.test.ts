// Integration against the real Python session server over its native TCP
// framing. Requires the jointplan package to be installed (pip install -e ..).

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import { SessionClient } from "../src/client.js";
import { AnswerPanel, SteeringInput } from "../src/input.js";
import { TcpTransport } from "../src/transport_tcp.js";

const PYTHON = process.env.PYTHON ?? "python3";
const procs: ChildProcess[] = [];

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

function startServer(scenario: string, mode: string, port: number, log: string):
  ChildProcess {
  const proc = spawn(PYTHON, [
    "-m", "jointplan", "serve", "--scenario", scenario, "--mode", mode,
    "--port", String(port), "--log", log,
  ], { stdio: ["ignore", "pipe", "pipe"] });
  procs.push(proc);
  return proc;
}

async function connectWithRetry(port: number, attempts = 40): Promise<TcpTransport> {
  for (let i = 0; i < attempts; i++) {
    try {
      return await TcpTransport.connect("127.0.0.1", port, 500);
    } catch {
      await sleep(250);
    }
  }
  throw new Error(`server on port ${port} never came up`);
}

async function waitFor(cond: () => boolean, timeoutMs: number, label: string):
  Promise<void> {
  const t0 = Date.now();
  while (!cond()) {
    if (Date.now() - t0 > timeoutMs) throw new Error(`timeout waiting for ${label}`);
    await sleep(20);
  }
}

afterAll(() => {
  for (const proc of procs) proc.kill("SIGKILL");
});

describe("live mode-2 session", () => {
  it("renders >=10 state updates/sec and steers the human marker", async () => {
    const log = join(mkdtempSync(join(tmpdir(), "jp-ui-")), "mode2.jsonl");
    startServer("demo/demo_mode2.json", "mode2", 18741, log);
    const transport = await connectWithRetry(18741);
    const client = new SessionClient(transport);
    const updateTimes: number[] = [];
    client.onChange((view) => {
      if (view.stateUpdates > updateTimes.length) updateTimes.push(Date.now());
    });

    await waitFor(() => client.view.scene !== null, 10000, "scenario_loaded");
    expect(client.view.mode).toBe("mode2");
    const startX = client.view.scene!.start[0];

    // measure the rendered update rate over a 2.05 s window
    await waitFor(() => updateTimes.length >= 1, 5000, "first state_update");
    const windowStart = updateTimes[0];
    await sleep(2100);
    const inWindow = updateTimes.filter((t) => t - windowStart <= 2050).length;
    expect(inWindow).toBeGreaterThanOrEqual(21); // >= 10 per second

    // hold "right" for one second at 10 Hz
    const steering = new SteeringInput({ speed: 1.0, rateHz: 10 });
    steering.keyDown("ArrowRight");
    for (let i = 0; i < 10; i++) {
      const move = steering.tick(client.view);
      expect(move).not.toBeNull();
      client.send(move!);
      await sleep(100);
    }
    steering.keyUp("ArrowRight");
    await sleep(300);
    expect(client.view.human).not.toBeNull();
    expect(client.view.human![0]).toBeGreaterThan(startX + 0.5);

    client.close();
    await sleep(100);
    const lines = readFileSync(log, "utf-8").trim().split("\n").map(
      (l) => JSON.parse(l));
    const moves = lines.filter((e) => e.dir === "in" && e.msg.kind === "human_move");
    expect(moves.length).toBeGreaterThanOrEqual(10);
  }, 30000);
});

describe("live mode-1 session", () => {
  it("answering prompts advances the server to the next query or final path",
    async () => {
      const log = join(mkdtempSync(join(tmpdir(), "jp-ui-")), "mode1.jsonl");
      startServer("demo/demo_mode1.json", "mode1", 18742, log);
      const transport = await connectWithRetry(18742);
      const client = new SessionClient(transport);
      const panel = new AnswerPanel();

      await waitFor(() => client.view.pending !== null, 10000, "first query");
      expect(client.view.pending!.kind).toBe("target");
      const pick = panel.answerTarget(client.view, "box_b")!;
      client.send(pick.msg);
      client.setView(pick.view);

      await waitFor(() => client.view.pending !== null, 10000, "second query");
      expect(client.view.pending!.kind).toBe("traversability");
      const trav = client.view.pending!;
      const answers: Record<string, boolean> = {};
      for (const oid of trav.objects ?? []) answers[oid] = true;
      const result = panel.answerTraversability(client.view, answers)!;
      client.send(result.msg);
      client.setView(result.view);

      await waitFor(() => client.view.ended !== null, 10000, "episode end");
      expect(client.view.ended!.outcome).toBe("planned");
      expect(client.view.path).not.toBeNull();
      expect(client.view.path!.length).toBeGreaterThan(5);

      client.close();
      await sleep(100);
      // the server log shows each inbound answer followed by fresh outbound
      // progress (another query, or the final state_update + episode_end)
      const lines = readFileSync(log, "utf-8").trim().split("\n").map(
        (l) => JSON.parse(l));
      const answerIdx = lines.findIndex(
        (e) => e.dir === "in" && e.msg.kind === "answer_target");
      expect(answerIdx).toBeGreaterThan(0);
      const afterTarget = lines.slice(answerIdx + 1).map((e) => e.msg.kind);
      expect(afterTarget).toContain("query_traversability");
      const travIdx = lines.findIndex(
        (e) => e.dir === "in" && e.msg.kind === "answer_traversability");
      const afterTrav = lines.slice(travIdx + 1)
        .filter((e) => e.dir === "out").map((e) => e.msg.kind);
      expect(afterTrav[0]).toBe("state_update");
      expect(afterTrav).toContain("episode_end");
    }, 30000);
});
