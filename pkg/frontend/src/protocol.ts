/**
 * Message types for the frame-stream protocol, v1 (see ../PROTOCOL.md).
 *
 * The client is a dumb terminal for guidance: it streams tool poses and
 * renders whatever comes back. Nothing in this module computes errors,
 * separations, or visibility; the types only mirror the wire grammar.
 */

export const PROTOCOL_VERSION = 1;

export type ConditionName = "EntryPoint" | "TargetAxis" | "DWEP" | "DWTA";

export const CONDITIONS: readonly ConditionName[] = [
  "EntryPoint",
  "TargetAxis",
  "DWEP",
  "DWTA",
];

export type AreaName = "Hidden" | "DynamicNonlinear" | "FrozenMax";
export type ChannelName = "PX" | "PY" | "PZ" | "RX" | "RZ";

/** Orientation quaternions ride the wire as [w, x, y, z]. */
export interface WirePose {
  position: [number, number, number];
  orientation: [number, number, number, number];
}

export interface WirePrimitive {
  id: string;
  shape: "cylinder" | "disc" | "v-form" | "paren-form" | "drill-avatar";
  pose: WirePose;
  scale: [number, number, number];
  color: string;
  depth_test_exempt: boolean;
}

export interface WireDuo {
  channel: ChannelName;
  shape: "v-form" | "paren-form";
  area: AreaName;
  separation: number;
  collimated: boolean;
  pair_poses: [WirePose, WirePose];
}

export interface RenderPayload {
  condition: ConditionName;
  primitives: WirePrimitive[];
  duos: WireDuo[];
}

export interface ErrorSummary {
  pm: number;
  px: number;
  py: number;
  pz: number;
  rm: number;
  rx: number;
  rz: number;
}

// --- server -> client ------------------------------------------------------

export interface FrameMsg {
  v: 1;
  type: "frame";
  session: string;
  seq: number | null;
  render: RenderPayload;
  error_summary: ErrorSummary;
}

export interface TrialAdvanceMsg {
  v: 1;
  type: "trial_advance";
  session: string;
  condition: ConditionName;
  trial_index: number;
  trials_total: number;
  target: WirePose;
  elapsed: number | null;
}

export interface SessionRecord {
  subject: number;
  condition: ConditionName;
  trial: number;
  target: [number, number, number];
  time: number;
  pm: number;
  px: number;
  py: number;
  pz: number;
  rm: number;
  rx: number;
  rz: number;
  timed_out: boolean;
  seed: number;
}

export interface SessionSummaryMsg {
  v: 1;
  type: "session_summary";
  session: string;
  records: SessionRecord[];
  csv: string;
}

export interface ErrorMsg {
  v: 1;
  type: "error";
  session: string | null;
  code: string;
  detail: string;
}

export type ServerMsg = FrameMsg | TrialAdvanceMsg | SessionSummaryMsg | ErrorMsg;

// --- client -> server ------------------------------------------------------

export interface StartSessionMsg {
  v: 1;
  type: "start_session";
  condition: ConditionName;
  seed?: number;
  subject?: number;
  widget?: Record<string, number>;
}

export interface PoseUpdateMsg {
  v: 1;
  type: "pose_update";
  session: string;
  seq: number;
  t_client: number;
  tool: WirePose;
}

export interface PedalMsg {
  v: 1;
  type: "pedal";
  session: string;
  t_client: number;
}

export interface EndSessionMsg {
  v: 1;
  type: "end_session";
  session: string;
}

export type ClientMsg = StartSessionMsg | PoseUpdateMsg | PedalMsg | EndSessionMsg;

// --- parsing ---------------------------------------------------------------

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isNumberArray(v: unknown, n: number): boolean {
  return Array.isArray(v) && v.length === n && v.every(isFiniteNumber);
}

function isWirePose(v: unknown): v is WirePose {
  if (typeof v !== "object" || v === null) return false;
  const o = v as Record<string, unknown>;
  return isNumberArray(o.position, 3) && isNumberArray(o.orientation, 4);
}

const SERVER_TYPES = new Set(["frame", "trial_advance", "session_summary", "error"]);

/**
 * Parse one server line / text frame. Returns null for anything that is
 * not a well-formed v1 server message; the caller decides whether silence
 * or a visible complaint is the right response.
 */
export function parseServerMsg(text: string): ServerMsg | null {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) return null;
  const m = obj as Record<string, unknown>;
  if (m.v !== PROTOCOL_VERSION || typeof m.type !== "string") return null;
  if (!SERVER_TYPES.has(m.type)) return null;
  switch (m.type) {
    case "frame": {
      const render = m.render as Record<string, unknown> | undefined;
      if (
        typeof m.session !== "string" ||
        typeof render !== "object" ||
        render === null ||
        !Array.isArray(render.primitives) ||
        !Array.isArray(render.duos) ||
        !render.primitives.every(isPrimitive) ||
        !render.duos.every(isDuo)
      ) {
        return null;
      }
      return m as unknown as FrameMsg;
    }
    case "trial_advance":
      if (
        typeof m.session !== "string" ||
        !Number.isInteger(m.trial_index) ||
        !Number.isInteger(m.trials_total) ||
        !isWirePose(m.target)
      ) {
        return null;
      }
      return m as unknown as TrialAdvanceMsg;
    case "session_summary":
      if (typeof m.session !== "string" || !Array.isArray(m.records) || typeof m.csv !== "string") {
        return null;
      }
      return m as unknown as SessionSummaryMsg;
    case "error":
      if (typeof m.code !== "string" || typeof m.detail !== "string") return null;
      return m as unknown as ErrorMsg;
  }
  return null;
}

function isPrimitive(v: unknown): v is WirePrimitive {
  if (typeof v !== "object" || v === null) return false;
  const o = v as Record<string, unknown>;
  return (
    typeof o.id === "string" &&
    typeof o.shape === "string" &&
    isWirePose(o.pose) &&
    isNumberArray(o.scale, 3) &&
    typeof o.color === "string" &&
    typeof o.depth_test_exempt === "boolean"
  );
}

function isDuo(v: unknown): v is WireDuo {
  if (typeof v !== "object" || v === null) return false;
  const o = v as Record<string, unknown>;
  return (
    typeof o.channel === "string" &&
    typeof o.shape === "string" &&
    typeof o.area === "string" &&
    isFiniteNumber(o.separation) &&
    typeof o.collimated === "boolean" &&
    Array.isArray(o.pair_poses) &&
    o.pair_poses.length === 2 &&
    o.pair_poses.every(isWirePose)
  );
}

export function encodeClientMsg(msg: ClientMsg): string {
  return JSON.stringify(msg);
}
