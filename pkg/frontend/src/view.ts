// Pure view-state reducer. The client renders only acknowledged server
// state and never simulates planning locally: every field below is a copy
// of something a server message carried.

import type { SceneDoc, ServerMessage } from "./protocol.js";

export interface PendingQuery {
  seq: number;
  kind: "target" | "traversability";
  question?: string;
  options?: string[];
  objects?: string[];
}

export interface ViewState {
  connection: "connecting" | "open" | "closed";
  mode: "mode1" | "mode2" | null;
  scene: SceneDoc | null;
  t: number;
  human: [number, number] | null;
  robot: [number, number] | null;
  completed: string[];
  path: [number, number][] | null;
  belief: { probs: Record<string, number>; top: string; rho: number } | null;
  decision: { target: string; mode: string } | null;
  pending: PendingQuery | null;
  answeredSeqs: number[];
  ended: { outcome: string } | null;
  lastError: string | null;
  stateUpdates: number;
  lastSeq: number;
}

export function initialView(): ViewState {
  return {
    connection: "connecting",
    mode: null,
    scene: null,
    t: 0,
    human: null,
    robot: null,
    completed: [],
    path: null,
    belief: null,
    decision: null,
    pending: null,
    answeredSeqs: [],
    ended: null,
    lastError: null,
    stateUpdates: 0,
    lastSeq: 0,
  };
}

export function applyMessage(view: ViewState, msg: ServerMessage): ViewState {
  const next = { ...view, lastSeq: msg.seq ?? view.lastSeq };
  switch (msg.kind) {
    case "scenario_loaded":
      next.mode = msg.mode;
      next.scene = msg.scene;
      next.human = msg.scene.start ?? null;
      next.robot = msg.scene.goal ?? null;
      break;
    case "state_update":
      next.t = msg.t;
      if (msg.human) next.human = msg.human;
      if (msg.robot) next.robot = msg.robot;
      next.completed = msg.completed ?? next.completed;
      if (msg.path) next.path = msg.path;
      next.stateUpdates = view.stateUpdates + 1;
      break;
    case "belief_update":
      next.belief = { probs: msg.probs, top: msg.top, rho: msg.rho };
      break;
    case "robot_decision":
      next.decision = { target: msg.target, mode: msg.mode };
      break;
    case "query_target":
      next.pending = {
        seq: msg.seq,
        kind: "target",
        question: msg.question,
        options: msg.options,
      };
      break;
    case "query_traversability":
      next.pending = { seq: msg.seq, kind: "traversability", objects: msg.objects };
      break;
    case "episode_end":
      next.ended = { outcome: msg.outcome };
      next.pending = null;
      break;
    case "error":
      next.lastError = msg.message;
      break;
  }
  return next;
}

export function markAnswered(view: ViewState, seq: number): ViewState {
  const pending = view.pending && view.pending.seq === seq ? null : view.pending;
  return { ...view, pending, answeredSeqs: [...view.answeredSeqs, seq] };
}

export function isAnswered(view: ViewState, seq: number): boolean {
  return view.answeredSeqs.includes(seq);
}

/** Belief entries sorted for stable probability bars. */
export function beliefBars(view: ViewState): { id: string; p: number; top: boolean }[] {
  if (!view.belief) return [];
  const top = view.belief.top;
  return Object.entries(view.belief.probs)
    .map(([id, p]) => ({ id, p, top: id === top }))
    .sort((a, b) => a.id.localeCompare(b.id));
}
