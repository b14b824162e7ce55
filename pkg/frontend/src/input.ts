// Keyboard steering and query answering. Movement chains optimistically
// from the last sent position (the rendered marker still follows server
// state only); answers are sent exactly once per query seq.

import type {
  AnswerTarget,
  AnswerTraversability,
  HumanMove,
} from "./protocol.js";
import { ViewState, isAnswered, markAnswered } from "./view.js";

const KEY_DIRS: Record<string, [number, number]> = {
  ArrowRight: [1, 0],
  ArrowLeft: [-1, 0],
  ArrowUp: [0, 1],
  ArrowDown: [0, -1],
  KeyD: [1, 0],
  KeyA: [-1, 0],
  KeyW: [0, 1],
  KeyS: [0, -1],
};

export class SteeringInput {
  private held = new Set<string>();
  private cursor: [number, number] | null = null;
  readonly stepPerTick: number;

  constructor(opts: { speed?: number; rateHz?: number } = {}) {
    const speed = opts.speed ?? 1.0;
    const rate = opts.rateHz ?? 10;
    this.stepPerTick = speed / rate;
  }

  keyDown(code: string): void {
    if (code in KEY_DIRS) this.held.add(code);
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  get direction(): [number, number] {
    let dx = 0;
    let dy = 0;
    for (const code of this.held) {
      dx += KEY_DIRS[code][0];
      dy += KEY_DIRS[code][1];
    }
    const norm = Math.hypot(dx, dy);
    return norm > 0 ? [dx / norm, dy / norm] : [0, 0];
  }

  /** One input tick: a human_move when keys are held, else nothing. */
  tick(view: ViewState): HumanMove | null {
    if (view.mode !== "mode2" || view.ended) return null;
    const [dx, dy] = this.direction;
    if (dx === 0 && dy === 0) {
      this.cursor = null; // re-anchor to server state on the next press
      return null;
    }
    const anchor = this.cursor ?? view.human;
    if (!anchor) return null;
    this.cursor = [anchor[0] + dx * this.stepPerTick, anchor[1] + dy * this.stepPerTick];
    return { kind: "human_move", pos: [this.cursor[0], this.cursor[1]] };
  }
}

export class AnswerPanel {
  /** Click a target option; null when nothing is pending or already answered. */
  answerTarget(view: ViewState, option: string):
    { msg: AnswerTarget; view: ViewState } | null {
    const q = view.pending;
    if (!q || q.kind !== "target" || isAnswered(view, q.seq)) return null;
    if (!q.options || !q.options.includes(option)) return null;
    return {
      msg: { kind: "answer_target", in_reply_to: q.seq, answer: option },
      view: markAnswered(view, q.seq),
    };
  }

  /** Submit passable/blocked toggles; requires a value per asked object. */
  answerTraversability(view: ViewState, answers: Record<string, boolean>):
    { msg: AnswerTraversability; view: ViewState } | null {
    const q = view.pending;
    if (!q || q.kind !== "traversability" || isAnswered(view, q.seq)) return null;
    const objects = q.objects ?? [];
    for (const oid of objects) {
      if (!(oid in answers)) return null;
    }
    const filtered: Record<string, boolean> = {};
    for (const oid of objects) filtered[oid] = answers[oid];
    return {
      msg: { kind: "answer_traversability", in_reply_to: q.seq, answers: filtered },
      view: markAnswered(view, q.seq),
    };
  }
}
