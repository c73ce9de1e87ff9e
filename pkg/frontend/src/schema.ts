/**
 * Wire schema for the operator console.
 *
 * Frames arrive as JSON from the session bridge; operator commands go back
 * as JSON.  Decoding is strict: a malformed frame is rejected with an error
 * naming the offending field, mirroring the server-side validation, so a
 * schema drift surfaces immediately instead of as a blank canvas.
 */

export type EntityKind = "ally" | "enemy" | "radar";
export type TermState = "running" | "timeout" | "success" | "defeat";

export interface Entity {
  k: EntityKind;
  id: number;
  x: number;
  y: number;
  phi: number;
  /** 1 while the unit is functional, 0 once destroyed. */
  f: 0 | 1;
}

export interface Track {
  /** Index of the enemy this fused estimate refers to. */
  id: number;
  x: number;
  y: number;
  /** Ticks since the estimate was last refreshed by a detection. */
  age: number;
}

export interface Frame {
  type: "frame";
  tick: number;
  entities: Entity[];
  term: TermState;
  /** Tracking reward emitted this tick. */
  rt: number;
  /** Neutralization reward emitted this tick. */
  rn: number;
  /** Operator reward injected this tick. */
  rh: number;
  tracks: Track[];
  /** Ally index (as a string key) -> enemy index it is assigned to. */
  assign: Record<string, number>;
}

export type OperatorMessage =
  | { type: "takeover"; drone_id: number; u_ma: number; u_sr: number }
  | { type: "release"; drone_id: number }
  | { type: "reward"; value: number }
  | { type: "start"; scenario: string; seed: number }
  | { type: "pause" }
  | { type: "resume" };

export class SchemaError extends Error {}

const KINDS: ReadonlySet<string> = new Set(["ally", "enemy", "radar"]);
const TERMS: ReadonlySet<string> = new Set([
  "running",
  "timeout",
  "success",
  "defeat",
]);

function need(obj: Record<string, unknown>, field: string): unknown {
  if (!(field in obj)) {
    throw new SchemaError(`missing field: ${field}`);
  }
  return obj[field];
}

function asNumber(value: unknown, field: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new SchemaError(`field out of range: ${field}`);
  }
  return value;
}

function decodeEntity(raw: unknown, index: number): Entity {
  if (typeof raw !== "object" || raw === null) {
    throw new SchemaError(`field out of range: entities[${index}]`);
  }
  const obj = raw as Record<string, unknown>;
  const k = need(obj, "k");
  if (typeof k !== "string" || !KINDS.has(k)) {
    throw new SchemaError(`field out of range: entities[${index}].k`);
  }
  const f = asNumber(need(obj, "f"), `entities[${index}].f`);
  if (f !== 0 && f !== 1) {
    throw new SchemaError(`field out of range: entities[${index}].f`);
  }
  return {
    k: k as EntityKind,
    id: asNumber(need(obj, "id"), `entities[${index}].id`),
    x: asNumber(need(obj, "x"), `entities[${index}].x`),
    y: asNumber(need(obj, "y"), `entities[${index}].y`),
    phi: asNumber(need(obj, "phi"), `entities[${index}].phi`),
    f: f as 0 | 1,
  };
}

function decodeTrack(raw: unknown, index: number): Track {
  if (typeof raw !== "object" || raw === null) {
    throw new SchemaError(`field out of range: tracks[${index}]`);
  }
  const obj = raw as Record<string, unknown>;
  return {
    id: asNumber(need(obj, "id"), `tracks[${index}].id`),
    x: asNumber(need(obj, "x"), `tracks[${index}].x`),
    y: asNumber(need(obj, "y"), `tracks[${index}].y`),
    age: asNumber(need(obj, "age"), `tracks[${index}].age`),
  };
}

/** A server-to-client message: either a world frame or an error reply. */
export type ServerMessage =
  | { kind: "frame"; frame: Frame }
  | { kind: "error"; detail: string };

export function decodeServer(text: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch (exc) {
    throw new SchemaError(`invalid json: ${exc}`);
  }
  if (typeof data !== "object" || data === null) {
    throw new SchemaError("missing field: type");
  }
  const obj = data as Record<string, unknown>;
  const type = need(obj, "type");
  if (type === "error") {
    const detail = need(obj, "detail");
    if (typeof detail !== "string") {
      throw new SchemaError("field out of range: detail");
    }
    return { kind: "error", detail };
  }
  if (type !== "frame") {
    throw new SchemaError(`unknown message type: ${type}`);
  }
  return { kind: "frame", frame: decodeFrameObject(obj) };
}

export function decodeFrame(text: string): Frame {
  const msg = decodeServer(text);
  if (msg.kind === "error") {
    throw new SchemaError(`server error: ${msg.detail}`);
  }
  return msg.frame;
}

function decodeFrameObject(obj: Record<string, unknown>): Frame {
  const term = need(obj, "term");
  if (typeof term !== "string" || !TERMS.has(term)) {
    throw new SchemaError("field out of range: term");
  }
  const rawEntities = need(obj, "entities");
  if (!Array.isArray(rawEntities)) {
    throw new SchemaError("field out of range: entities");
  }
  const rawTracks = need(obj, "tracks");
  if (!Array.isArray(rawTracks)) {
    throw new SchemaError("field out of range: tracks");
  }
  const rawAssign = need(obj, "assign");
  if (typeof rawAssign !== "object" || rawAssign === null ||
      Array.isArray(rawAssign)) {
    throw new SchemaError("field out of range: assign");
  }
  const assign: Record<string, number> = {};
  for (const [key, value] of Object.entries(rawAssign)) {
    assign[key] = asNumber(value, `assign.${key}`);
  }
  return {
    type: "frame",
    tick: asNumber(need(obj, "tick"), "tick"),
    entities: rawEntities.map(decodeEntity),
    term: term as TermState,
    rt: asNumber(need(obj, "rt"), "rt"),
    rn: asNumber(need(obj, "rn"), "rn"),
    rh: asNumber(need(obj, "rh"), "rh"),
    tracks: rawTracks.map(decodeTrack),
    assign,
  };
}

/**
 * Serialize an operator message after validating the same bounds the server
 * enforces, so invalid input is caught at the console instead of producing
 * a silent protocol error on the other side.
 */
export function encodeOperator(msg: OperatorMessage): string {
  switch (msg.type) {
    case "takeover":
      if (!(msg.u_ma >= -Math.PI && msg.u_ma <= Math.PI)) {
        throw new SchemaError("field out of range: u_ma");
      }
      if (!(msg.u_sr >= 0 && msg.u_sr <= 1)) {
        throw new SchemaError("field out of range: u_sr");
      }
      if (!Number.isInteger(msg.drone_id) || msg.drone_id < 0) {
        throw new SchemaError("field out of range: drone_id");
      }
      break;
    case "release":
      if (!Number.isInteger(msg.drone_id) || msg.drone_id < 0) {
        throw new SchemaError("field out of range: drone_id");
      }
      break;
    case "reward":
      if (!(msg.value >= -1 && msg.value <= 1)) {
        throw new SchemaError("field out of range: value");
      }
      break;
    case "start":
      if (!Number.isInteger(msg.seed)) {
        throw new SchemaError("field out of range: seed");
      }
      break;
    case "pause":
    case "resume":
      break;
  }
  return JSON.stringify(msg);
}
