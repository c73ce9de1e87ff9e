/**
 * Client-side view model.
 *
 * Keeps the latest frame plus derived display state: per-entity motion
 * trails, which drones the operator currently controls, cumulative rewards,
 * and a staleness clock.  Frames must arrive in tick order; anything at or
 * behind the last applied tick is discarded (and counted) rather than
 * rendered, so a delayed duplicate can never make the picture jump
 * backwards.
 */

import type { Entity, Frame, TermState } from "./schema.js";

export interface TrailPoint {
  x: number;
  y: number;
  tick: number;
}

const TRAIL_LENGTH = 40;

export class ViewModel {
  frame: Frame | null = null;
  /** Trails keyed by "kind:id". */
  trails = new Map<string, TrailPoint[]>();
  takenOver = new Set<number>();
  totalRt = 0;
  totalRn = 0;
  totalRh = 0;
  discarded = 0;
  /** Wall-clock ms timestamp of the last applied frame. */
  lastFrameAt = 0;

  /** Apply a frame; returns false if it was out of order and dropped. */
  apply(frame: Frame, now: number = Date.now()): boolean {
    if (this.frame !== null && frame.tick <= this.frame.tick) {
      this.discarded += 1;
      return false;
    }
    this.frame = frame;
    this.totalRt += frame.rt;
    this.totalRn += frame.rn;
    this.totalRh += frame.rh;
    this.lastFrameAt = now;
    for (const e of frame.entities) {
      if (e.k === "radar" || e.f === 0) continue;
      const key = `${e.k}:${e.id}`;
      let trail = this.trails.get(key);
      if (trail === undefined) {
        trail = [];
        this.trails.set(key, trail);
      }
      trail.push({ x: e.x, y: e.y, tick: frame.tick });
      if (trail.length > TRAIL_LENGTH) {
        trail.shift();
      }
    }
    return true;
  }

  /** Reset everything for a new episode (on `start`). */
  reset(): void {
    this.frame = null;
    this.trails.clear();
    this.takenOver.clear();
    this.totalRt = 0;
    this.totalRn = 0;
    this.totalRh = 0;
    this.discarded = 0;
    this.lastFrameAt = 0;
  }

  markTakeover(droneId: number): void {
    this.takenOver.add(droneId);
  }

  markRelease(droneId: number): void {
    this.takenOver.delete(droneId);
  }

  get term(): TermState {
    return this.frame?.term ?? "running";
  }

  get tick(): number {
    return this.frame?.tick ?? -1;
  }

  entity(kind: string, id: number): Entity | undefined {
    return this.frame?.entities.find((e) => e.k === kind && e.id === id);
  }

  /** True when no frame has arrived for longer than `thresholdMs`. */
  isStale(now: number = Date.now(), thresholdMs = 500): boolean {
    if (this.frame === null || this.term !== "running") return false;
    return now - this.lastFrameAt > thresholdMs;
  }
}
