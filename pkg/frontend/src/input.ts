/**
 * Operator input mapping.
 *
 * Converts console gestures into wire messages: clicking while a drone is
 * selected takes it over with a movement angle pointing from the drone to
 * the pointer and the throttle from the speed slider; a release key frees
 * the drone; reward buttons send a bounded scalar.  The mapping is pure
 * functions over positions, so it is directly testable.
 */

import type { OperatorMessage } from "./schema.js";

/**
 * Movement-angle command for steering from `(dx, dy)` toward
 * `(tx, ty)` in world coordinates.  Angles follow the simulation
 * convention: radians in (-pi, pi], 0 along +x, positive
 * counter-clockwise.
 */
export function bearingToward(
  dx: number,
  dy: number,
  tx: number,
  ty: number
): number {
  return Math.atan2(ty - dy, tx - dx);
}

export function takeoverToward(
  droneId: number,
  dronePos: [number, number],
  targetWorld: [number, number],
  throttle: number
): OperatorMessage {
  const u_ma = bearingToward(
    dronePos[0],
    dronePos[1],
    targetWorld[0],
    targetWorld[1]
  );
  return {
    type: "takeover",
    drone_id: droneId,
    u_ma,
    u_sr: Math.min(1, Math.max(0, throttle)),
  };
}

export function release(droneId: number): OperatorMessage {
  return { type: "release", drone_id: droneId };
}

export function reward(value: number): OperatorMessage {
  return { type: "reward", value: Math.min(1, Math.max(-1, value)) };
}

/** Nearest living ally to a world point, or null if none within `maxDist`. */
export function pickAlly(
  allies: { id: number; x: number; y: number; f: number }[],
  wx: number,
  wy: number,
  maxDist: number
): number | null {
  let best: number | null = null;
  let bestD = maxDist;
  for (const a of allies) {
    if (a.f === 0) continue;
    const d = Math.hypot(a.x - wx, a.y - wy);
    if (d <= bestD) {
      bestD = d;
      best = a.id;
    }
  }
  return best;
}
