// Canvas renderer: world on a 2D canvas, belief bars and query prompts as
// DOM nodes so answers are deliberate clicks.

import { ViewState, beliefBars } from "./view.js";

export interface RenderTargets {
  canvas: HTMLCanvasElement;
  bars: HTMLElement;
  prompt: HTMLElement;
  status: HTMLElement;
}

function toPx(view: ViewState, canvas: HTMLCanvasElement, p: [number, number]):
  [number, number] {
  const g = view.scene!.grid;
  const w = g.width * g.resolution;
  const h = g.height * g.resolution;
  const sx = canvas.width / w;
  const sy = canvas.height / h;
  return [(p[0] - g.origin[0]) * sx, canvas.height - (p[1] - g.origin[1]) * sy];
}

export function render(view: ViewState, targets: RenderTargets): void {
  const { canvas, bars, prompt, status } = targets;
  status.textContent = view.connection === "open"
    ? (view.ended ? `episode ${view.ended.outcome}` : `t = ${view.t.toFixed(1)} s`)
    : `connection ${view.connection}...`;
  status.className = view.connection === "open" ? "status ok" : "status bad";

  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!view.scene) return;
  const g = view.scene.grid;
  const cell = toPx(view, canvas, [g.origin[0] + g.resolution, g.origin[1]])[0]
    - toPx(view, canvas, [g.origin[0], g.origin[1]])[0];

  ctx.fillStyle = "#2a3340";
  for (const [i, j] of g.blocked_cells ?? []) {
    const [x, y] = toPx(view, canvas,
      [g.origin[0] + i * g.resolution, g.origin[1] + (j + 1) * g.resolution]);
    ctx.fillRect(x, y, cell, cell);
  }

  for (const obj of view.scene.objects) {
    const [x0, y0] = toPx(view, canvas, [obj.aabb.min[0], obj.aabb.max[1]]);
    const [x1, y1] = toPx(view, canvas, [obj.aabb.max[0], obj.aabb.min[1]]);
    const prior = typeof obj.traversability === "object"
      ? obj.traversability.prior : obj.traversability === "blocked" ? 0 : 1;
    ctx.fillStyle = `rgba(214, 93, 60, ${1 - 0.8 * prior})`;
    ctx.fillRect(x0, y0, Math.max(x1 - x0, 3), Math.max(y1 - y0, 3));
    ctx.fillStyle = "#9aa7b5";
    ctx.font = "11px sans-serif";
    ctx.fillText(obj.id, x0, y0 - 3);
  }

  for (const task of view.scene.tasks) {
    const [x, y] = toPx(view, canvas, task.position);
    const done = view.completed.includes(task.id);
    ctx.beginPath();
    ctx.arc(x, y, 9, 0, Math.PI * 2);
    ctx.fillStyle = done ? "#3a4350" : task.kind === "cooperative" ? "#c9a227" : "#3f8efc";
    ctx.fill();
    ctx.fillStyle = done ? "#6b7684" : "#e8edf3";
    ctx.font = "11px sans-serif";
    ctx.fillText(task.id + (done ? " ✓" : ""), x + 12, y + 4);
  }

  if (view.path) {
    ctx.beginPath();
    ctx.strokeStyle = "#62d66a";
    ctx.lineWidth = 2;
    view.path.forEach((p, i) => {
      const [x, y] = toPx(view, canvas, p);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }

  const markers: [/*pos*/[number, number] | null, string, string][] = [
    [view.human, "#f2f2f2", "human"],
    [view.robot, "#62d66a", "robot"],
  ];
  for (const [pos, color, label] of markers) {
    if (!pos) continue;
    const [x, y] = toPx(view, canvas, pos);
    ctx.beginPath();
    ctx.arc(x, y, 7, 0, Math.PI * 2);
    ctx.fillStyle = color;
    ctx.fill();
    ctx.fillText(label, x + 10, y - 6);
  }

  renderBars(view, bars);
  renderPrompt(view, prompt);
}

function renderBars(view: ViewState, bars: HTMLElement): void {
  const rows = beliefBars(view);
  bars.innerHTML = "";
  for (const row of rows) {
    const div = document.createElement("div");
    div.className = "bar-row";
    const label = document.createElement("span");
    label.textContent = `${row.id} ${(row.p * 100).toFixed(0)}%`;
    const outer = document.createElement("div");
    outer.className = "bar-outer";
    const inner = document.createElement("div");
    inner.className = row.top ? "bar-inner top" : "bar-inner";
    inner.style.width = `${Math.round(row.p * 100)}%`;
    outer.appendChild(inner);
    div.appendChild(label);
    div.appendChild(outer);
    bars.appendChild(div);
  }
  if (view.decision) {
    const div = document.createElement("div");
    div.className = "decision";
    div.textContent = `robot → ${view.decision.target} (${view.decision.mode})`;
    bars.appendChild(div);
  }
}

export type AnswerHandler =
  | { kind: "target"; seq: number; option: string }
  | { kind: "traversability"; seq: number; answers: Record<string, boolean> };

let onAnswer: ((a: AnswerHandler) => void) | null = null;

export function setAnswerHandler(cb: (a: AnswerHandler) => void): void {
  onAnswer = cb;
}

function renderPrompt(view: ViewState, prompt: HTMLElement): void {
  if (!view.pending) {
    prompt.style.display = "none";
    return;
  }
  const q = view.pending;
  prompt.style.display = "block";
  prompt.innerHTML = "";
  const title = document.createElement("p");
  if (q.kind === "target") {
    title.textContent = q.question ?? "Which object?";
    prompt.appendChild(title);
    for (const option of q.options ?? []) {
      const btn = document.createElement("button");
      btn.textContent = option;
      btn.onclick = () => onAnswer?.({ kind: "target", seq: q.seq, option });
      prompt.appendChild(btn);
    }
  } else {
    title.textContent = `Traversability? ${q.objects?.join(", ")}`;
    prompt.appendChild(title);
    const toggles: Record<string, boolean> = {};
    for (const oid of q.objects ?? []) {
      toggles[oid] = true;
      const row = document.createElement("div");
      const label = document.createElement("label");
      label.textContent = oid;
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = true;
      box.onchange = () => { toggles[oid] = box.checked; };
      row.appendChild(box);
      row.appendChild(label);
      prompt.appendChild(row);
    }
    const note = document.createElement("p");
    note.className = "hint";
    note.textContent = "checked = passable";
    prompt.appendChild(note);
    const btn = document.createElement("button");
    btn.textContent = "Answer";
    btn.onclick = () =>
      onAnswer?.({ kind: "traversability", seq: q.seq, answers: { ...toggles } });
    prompt.appendChild(btn);
  }
}
