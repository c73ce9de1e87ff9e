/**
 * Browser entry point: wires the websocket client, view model, renderer,
 * and pointer/keyboard input together around the canvas in index.html.
 */

import { BridgeClient } from "./net.js";
import { pickAlly, release, reward, takeoverToward } from "./input.js";
import { DEFAULT_VIEWPORT, render, screenToWorld } from "./render.js";
import type { Viewport } from "./render.js";
import { ViewModel } from "./store.js";

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const status = document.getElementById("status")!;
const throttleInput = document.getElementById("throttle") as HTMLInputElement;

const vp: Viewport = {
  ...DEFAULT_VIEWPORT,
  width: canvas.width,
  height: canvas.height,
};
const vm = new ViewModel();
let selected: number | null = null;

const client = new BridgeClient(
  `ws://${location.hostname}:8765`,
  {
    onFrame: (frame) => vm.apply(frame),
    onOpen: () => (status.textContent = "connected"),
    onClose: () => (status.textContent = "disconnected"),
    onError: (msg) => (status.textContent = `protocol error: ${msg}`),
  },
  (url) => {
    const raw = new WebSocket(url);
    const wrapped = {
      send: (d: string) => raw.send(d),
      close: () => raw.close(),
      onopen: null as (() => void) | null,
      onclose: null as (() => void) | null,
      onmessage: null as ((event: { data: unknown }) => void) | null,
    };
    raw.onopen = () => wrapped.onopen?.();
    raw.onclose = () => wrapped.onclose?.();
    raw.onmessage = (ev) => wrapped.onmessage?.({ data: ev.data });
    return wrapped;
  }
);
client.connect();

canvas.addEventListener("pointerdown", (ev) => {
  const rect = canvas.getBoundingClientRect();
  const [wx, wy] = screenToWorld(vp, ev.clientX - rect.left,
                                 ev.clientY - rect.top);
  const allies =
    vm.frame?.entities.filter((e) => e.k === "ally") ?? [];
  if (selected === null) {
    // First click selects the nearest living drone (within 200 m).
    selected = pickAlly(allies, wx, wy, 200);
    if (selected !== null) {
      status.textContent = `selected drone ${selected}`;
    }
    return;
  }
  const drone = vm.entity("ally", selected);
  if (drone === undefined || drone.f === 0) {
    selected = null;
    return;
  }
  const msg = takeoverToward(selected, [drone.x, drone.y], [wx, wy],
                             Number(throttleInput.value));
  if (client.send(msg)) {
    vm.markTakeover(selected);
  }
});

window.addEventListener("keydown", (ev) => {
  if (ev.key === "r" && selected !== null) {
    client.send(release(selected));
    vm.markRelease(selected);
    selected = null;
  } else if (ev.key === "Escape") {
    selected = null;
  }
});

for (const [id, value] of [["reward-up", 1], ["reward-down", -1]] as const) {
  document.getElementById(id)?.addEventListener("click", () => {
    client.send(reward(value));
  });
}

document.getElementById("restart")?.addEventListener("click", () => {
  vm.reset();
  client.send({ type: "start", scenario: "decoy", seed: 0 });
});

function loop(): void {
  render(ctx, vm, vp);
  requestAnimationFrame(loop);
}
requestAnimationFrame(loop);
