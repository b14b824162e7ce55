// Browser entry: connect to the session server over WebSocket, steer with
// WASD/arrows, answer queries from the modal prompt.

import { SessionClient } from "./client.js";
import { AnswerPanel, SteeringInput } from "./input.js";
import { WsTransport } from "./transport_ws.js";
import { render, setAnswerHandler } from "./render.js";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const port = params.get("port") ?? "8765";
const url = `ws://${host}:${port}`;

const targets = {
  canvas: document.getElementById("world") as HTMLCanvasElement,
  bars: document.getElementById("bars") as HTMLElement,
  prompt: document.getElementById("prompt") as HTMLElement,
  status: document.getElementById("status") as HTMLElement,
};

const client = new SessionClient(new WsTransport(url));
const steering = new SteeringInput({ speed: 1.0, rateHz: 10 });
const panel = new AnswerPanel();

window.addEventListener("keydown", (ev) => steering.keyDown(ev.code));
window.addEventListener("keyup", (ev) => steering.keyUp(ev.code));

setAnswerHandler((a) => {
  const result = a.kind === "target"
    ? panel.answerTarget(client.view, a.option)
    : panel.answerTraversability(client.view, a.answers);
  if (result) {
    client.send(result.msg);
    client.setView(result.view);
  }
});

setInterval(() => {
  const move = steering.tick(client.view);
  if (move) client.send(move);
}, 100);

client.onChange((view) => render(view, targets));
render(client.view, targets);
