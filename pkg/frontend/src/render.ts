/**
 * Scene renderer.
 *
 * Draws the tactical picture onto a 2D drawing surface: defended-area
 * circle, radar field-of-view wedges, drones (allies as triangles pointing
 * along their heading, enemies as diamonds, dead units greyed), fused
 * track estimates with age-based fade, assignment lines, motion trails,
 * takeover highlights, a staleness indicator, and a termination banner.
 *
 * The renderer targets the subset of CanvasRenderingContext2D it actually
 * uses, so tests can substitute a recording surface and assert on the draw
 * calls without a DOM.
 */

import type { Entity, Frame } from "./schema.js";
import type { ViewModel } from "./store.js";

export interface DrawSurface {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(
    x: number,
    y: number,
    r: number,
    a0: number,
    a1: number,
    ccw?: boolean
  ): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
}

export interface Viewport {
  width: number;
  height: number;
  /** World metres per CSS pixel. */
  scale: number;
  /** World coordinates at the canvas centre. */
  cx: number;
  cy: number;
}

export const DEFAULT_VIEWPORT: Viewport = {
  width: 800,
  height: 800,
  scale: 8,
  cx: 0,
  cy: 0,
};

export const COLORS = {
  background: "#0b1220",
  area: "#2d6cdf",
  radar: "#8ab4f8",
  radarWedge: "rgba(138,180,248,0.15)",
  ally: "#4caf50",
  allyTaken: "#ffd54f",
  enemy: "#ef5350",
  dead: "#5f6368",
  track: "#ce93d8",
  assign: "rgba(76,175,80,0.45)",
  trail: "rgba(255,255,255,0.25)",
  text: "#e8eaed",
  stale: "#ff9800",
};

/** Defended-area radius shown on the map, in metres. */
export const AREA_RADIUS = 100;
/** Radar field-of-view half-angle, radians. */
export const RADAR_HALF_FOV = Math.PI / 6;
/** Radar wedge display length, metres. */
export const RADAR_RANGE = 2000;

export function worldToScreen(
  vp: Viewport,
  x: number,
  y: number
): [number, number] {
  // Screen y grows downward; world y grows upward.
  return [
    vp.width / 2 + (x - vp.cx) / vp.scale,
    vp.height / 2 - (y - vp.cy) / vp.scale,
  ];
}

export function screenToWorld(
  vp: Viewport,
  sx: number,
  sy: number
): [number, number] {
  return [
    vp.cx + (sx - vp.width / 2) * vp.scale,
    vp.cy - (sy - vp.height / 2) * vp.scale,
  ];
}

function drawTriangle(
  ctx: DrawSurface,
  sx: number,
  sy: number,
  heading: number,
  size: number
): void {
  // phi is a world bearing; flip for screen-space y.
  const a = -heading;
  ctx.beginPath();
  ctx.moveTo(sx + size * Math.cos(a), sy + size * Math.sin(a));
  ctx.lineTo(
    sx + size * Math.cos(a + (2.5 * Math.PI) / 3),
    sy + size * Math.sin(a + (2.5 * Math.PI) / 3)
  );
  ctx.lineTo(
    sx + size * Math.cos(a - (2.5 * Math.PI) / 3),
    sy + size * Math.sin(a - (2.5 * Math.PI) / 3)
  );
  ctx.closePath();
  ctx.fill();
}

function drawDiamond(
  ctx: DrawSurface,
  sx: number,
  sy: number,
  size: number
): void {
  ctx.beginPath();
  ctx.moveTo(sx, sy - size);
  ctx.lineTo(sx + size, sy);
  ctx.lineTo(sx, sy + size);
  ctx.lineTo(sx - size, sy);
  ctx.closePath();
  ctx.fill();
}

function entityColor(e: Entity, taken: boolean): string {
  if (e.f === 0) return COLORS.dead;
  if (e.k === "ally") return taken ? COLORS.allyTaken : COLORS.ally;
  return COLORS.enemy;
}

export function render(
  ctx: DrawSurface,
  vm: ViewModel,
  vp: Viewport = DEFAULT_VIEWPORT,
  now: number = Date.now()
): void {
  ctx.globalAlpha = 1;
  ctx.fillStyle = COLORS.background;
  ctx.clearRect(0, 0, vp.width, vp.height);

  const frame = vm.frame;
  if (frame === null) {
    ctx.fillStyle = COLORS.text;
    ctx.font = "16px sans-serif";
    ctx.fillText("waiting for session", vp.width / 2 - 70, vp.height / 2);
    return;
  }

  drawArea(ctx, vp);
  drawRadars(ctx, vp, frame);
  drawTrails(ctx, vm, vp);
  drawAssignments(ctx, vp, frame);
  drawTracks(ctx, vp, frame);
  drawUnits(ctx, vm, vp, frame);
  drawHud(ctx, vm, vp, frame, now);
}

function drawArea(ctx: DrawSurface, vp: Viewport): void {
  const [sx, sy] = worldToScreen(vp, 0, 0);
  ctx.strokeStyle = COLORS.area;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.arc(sx, sy, AREA_RADIUS / vp.scale, 0, 2 * Math.PI);
  ctx.stroke();
}

function drawRadars(ctx: DrawSurface, vp: Viewport, frame: Frame): void {
  for (const e of frame.entities) {
    if (e.k !== "radar") continue;
    const [sx, sy] = worldToScreen(vp, e.x, e.y);
    const a = -e.phi;
    ctx.fillStyle = COLORS.radarWedge;
    ctx.beginPath();
    ctx.moveTo(sx, sy);
    ctx.arc(
      sx,
      sy,
      RADAR_RANGE / vp.scale,
      a - RADAR_HALF_FOV,
      a + RADAR_HALF_FOV
    );
    ctx.closePath();
    ctx.fill();
    ctx.fillStyle = COLORS.radar;
    ctx.beginPath();
    ctx.arc(sx, sy, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function drawTrails(ctx: DrawSurface, vm: ViewModel, vp: Viewport): void {
  ctx.strokeStyle = COLORS.trail;
  ctx.lineWidth = 1;
  for (const trail of vm.trails.values()) {
    if (trail.length < 2) continue;
    for (let i = 1; i < trail.length; i++) {
      // Older segments fade out.
      ctx.globalAlpha = i / trail.length;
      const [ax, ay] = worldToScreen(vp, trail[i - 1].x, trail[i - 1].y);
      const [bx, by] = worldToScreen(vp, trail[i].x, trail[i].y);
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
    }
  }
  ctx.globalAlpha = 1;
}

function drawAssignments(ctx: DrawSurface, vp: Viewport, frame: Frame): void {
  const allies = new Map<number, Entity>();
  const tracks = new Map<number, { x: number; y: number }>();
  for (const e of frame.entities) {
    if (e.k === "ally") allies.set(e.id, e);
  }
  for (const t of frame.tracks) {
    tracks.set(t.id, t);
  }
  ctx.strokeStyle = COLORS.assign;
  ctx.lineWidth = 1;
  for (const [allyId, enemyId] of Object.entries(frame.assign)) {
    const ally = allies.get(Number(allyId));
    const track = tracks.get(enemyId);
    if (ally === undefined || track === undefined) continue;
    const [ax, ay] = worldToScreen(vp, ally.x, ally.y);
    const [bx, by] = worldToScreen(vp, track.x, track.y);
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
  }
}

function drawTracks(ctx: DrawSurface, vp: Viewport, frame: Frame): void {
  ctx.strokeStyle = COLORS.track;
  ctx.lineWidth = 1;
  for (const t of frame.tracks) {
    // Stale estimates fade toward invisibility as they age out.
    ctx.globalAlpha = Math.max(0.15, 1 - t.age / 60);
    const [sx, sy] = worldToScreen(vp, t.x, t.y);
    ctx.beginPath();
    ctx.arc(sx, sy, 6, 0, 2 * Math.PI);
    ctx.stroke();
  }
  ctx.globalAlpha = 1;
}

function drawUnits(
  ctx: DrawSurface,
  vm: ViewModel,
  vp: Viewport,
  frame: Frame
): void {
  for (const e of frame.entities) {
    if (e.k === "radar") continue;
    const [sx, sy] = worldToScreen(vp, e.x, e.y);
    ctx.fillStyle = entityColor(e, vm.takenOver.has(e.id));
    if (e.k === "ally") {
      drawTriangle(ctx, sx, sy, e.phi, 6);
    } else {
      drawDiamond(ctx, sx, sy, 5);
    }
  }
}

function drawHud(
  ctx: DrawSurface,
  vm: ViewModel,
  vp: Viewport,
  frame: Frame,
  now: number
): void {
  ctx.fillStyle = COLORS.text;
  ctx.font = "13px monospace";
  ctx.fillText(`tick ${frame.tick}`, 10, 20);
  ctx.fillText(
    `r_t ${vm.totalRt.toFixed(3)}  r_n ${vm.totalRn.toFixed(3)}` +
      `  r_h ${vm.totalRh.toFixed(3)}`,
    10,
    38
  );
  if (vm.takenOver.size > 0) {
    ctx.fillStyle = COLORS.allyTaken;
    ctx.fillText(
      `takeover: ${[...vm.takenOver].sort((a, b) => a - b).join(",")}`,
      10,
      56
    );
  }
  if (vm.isStale(now)) {
    ctx.fillStyle = COLORS.stale;
    ctx.fillText("STALE FEED", vp.width - 100, 20);
  }
  if (frame.term !== "running") {
    ctx.font = "32px sans-serif";
    ctx.fillStyle =
      frame.term === "success" ? COLORS.ally : COLORS.enemy;
    ctx.fillText(frame.term.toUpperCase(), vp.width / 2 - 60, 60);
  }
}
