// Wire schema shared with the session server: JSON messages, newline-framed
// over TCP or one message per WebSocket text frame.

export interface SceneTask {
  id: string;
  position: [number, number];
  kind: "independent" | "cooperative";
  completion_radius: number;
}

export interface SceneObjectDoc {
  id: string;
  name: string;
  aabb: { min: [number, number]; max: [number, number] };
  traversability: "passable" | "blocked" | { prior: number };
  attributes: Record<string, string>;
  confidence: number;
}

export interface SceneDoc {
  grid: {
    origin: [number, number];
    resolution: number;
    width: number;
    height: number;
    blocked_cells?: [number, number][];
  };
  objects: SceneObjectDoc[];
  tasks: SceneTask[];
  start: [number, number];
  goal: [number, number];
}

export interface ScenarioLoaded {
  kind: "scenario_loaded";
  seq: number;
  mode: "mode1" | "mode2";
  scene: SceneDoc;
}

export interface StateUpdate {
  kind: "state_update";
  seq: number;
  t: number;
  human?: [number, number];
  robot?: [number, number];
  completed: string[];
  path?: [number, number][];
}

export interface BeliefUpdate {
  kind: "belief_update";
  seq: number;
  probs: Record<string, number>;
  top: string;
  rho: number;
}

export interface RobotDecision {
  kind: "robot_decision";
  seq: number;
  target: string;
  mode: string;
}

export interface QueryTarget {
  kind: "query_target";
  seq: number;
  question: string;
  options: string[];
  description: string;
}

export interface QueryTraversability {
  kind: "query_traversability";
  seq: number;
  objects: string[];
}

export interface EpisodeEnd {
  kind: "episode_end";
  seq: number;
  outcome: string;
  targets?: string[];
}

export interface ErrorMessage {
  kind: "error";
  seq: number;
  code: string;
  message: string;
}

export type ServerMessage =
  | ScenarioLoaded
  | StateUpdate
  | BeliefUpdate
  | RobotDecision
  | QueryTarget
  | QueryTraversability
  | EpisodeEnd
  | ErrorMessage;

export interface HumanMove {
  kind: "human_move";
  pos: [number, number];
}

export interface AnswerTarget {
  kind: "answer_target";
  in_reply_to: number;
  answer: string;
}

export interface AnswerTraversability {
  kind: "answer_traversability";
  in_reply_to: number;
  answers: Record<string, boolean>;
}

export type ClientMessage = HumanMove | AnswerTarget | AnswerTraversability;

const SERVER_KINDS = new Set([
  "scenario_loaded", "state_update", "belief_update", "robot_decision",
  "query_target", "query_traversability", "episode_end", "error",
]);

export function encodeMessage(msg: ClientMessage): string {
  return JSON.stringify(msg) + "\n";
}

export function decodeMessage(line: string): ServerMessage {
  const msg = JSON.parse(line);
  if (typeof msg !== "object" || msg === null || !SERVER_KINDS.has(msg.kind)) {
    throw new Error(`unexpected server message: ${line.slice(0, 120)}`);
  }
  return msg as ServerMessage;
}

/** Accumulates raw chunks and yields complete newline-framed messages. */
export class LineSplitter {
  private buffer = "";

  push(chunk: string): ServerMessage[] {
    this.buffer += chunk;
    const out: ServerMessage[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx).trim();
      this.buffer = this.buffer.slice(idx + 1);
      if (line.length > 0) {
        out.push(decodeMessage(line));
      }
    }
    return out;
  }
}
