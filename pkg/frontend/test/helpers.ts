/**
 * Test plumbing: spawn a real engine server, speak the line transport to
 * it in strict arrival order, and plan pointer ramps that steer the tool
 * to a target through the production input mapping.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { Quaternion, Vector3 } from "three";
import { cameraForward, cameraRight, cameraUp, type CameraRig } from "../src/camera.js";
import { NodeLineTransport } from "../src/nodeLineTransport.js";
import {
  applyDepthDrag,
  applyPlaneDrag,
  applyRotationDrag,
  DEG_PER_PIXEL,
  gestureScale,
  ToolPose,
} from "../src/pose.js";
import {
  encodeClientMsg,
  parseServerMsg,
  type ClientMsg,
  type ServerMsg,
  type WirePose,
} from "../src/protocol.js";

// --- engine process ----------------------------------------------------------

export interface ServerHandle {
  host: string;
  port: number;
  proc: ChildProcess;
}

export async function spawnServer(extraArgs: string[] = []): Promise<ServerHandle> {
  const proc = spawn("drillguide", ["serve", "--port", "0", ...extraArgs], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  let buffer = "";
  const banner = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server banner timeout")), 20_000);
    proc.stdout!.setEncoding("utf8");
    proc.stdout!.on("data", (chunk: string) => {
      buffer += chunk;
      const m = /listening on ([\d.]+):(\d+)/.exec(buffer);
      if (m !== null) {
        clearTimeout(timer);
        resolve(`${m[1]}:${m[2]}`);
      }
    });
    proc.once("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`server exited early (${code}): ${buffer}`));
    });
  });
  const [host, port] = banner.split(":");
  return { host: host!, port: Number(port), proc };
}

export async function stopServer(handle: ServerHandle): Promise<void> {
  const exited = new Promise<void>((resolve) => handle.proc.once("exit", () => resolve()));
  handle.proc.kill("SIGTERM");
  await exited;
}

// --- ordered protocol client --------------------------------------------------

/**
 * Minimal scripted client: every server message lands in one FIFO queue,
 * so a test can assert the exact conversation order the protocol
 * promises. (The production GuidanceClient conflates frames; a script
 * that sends one pose and awaits its echo never triggers conflation.)
 */
export class TestClient {
  private transport: NodeLineTransport;
  private queue: ServerMsg[] = [];
  private waiter: ((msg: ServerMsg) => void) | null = null;
  clock = 0;
  private nextSeq = 0;
  session: string | null = null;

  private constructor(transport: NodeLineTransport) {
    this.transport = transport;
    transport.onMessage((text) => {
      const msg = parseServerMsg(text);
      if (msg === null) throw new Error(`unparseable server message: ${text}`);
      if (this.waiter !== null) {
        const w = this.waiter;
        this.waiter = null;
        w(msg);
      } else {
        this.queue.push(msg);
      }
    });
  }

  static async connect(host: string, port: number): Promise<TestClient> {
    return new TestClient(await NodeLineTransport.connect(host, port));
  }

  send(msg: ClientMsg): void {
    this.transport.send(encodeClientMsg(msg));
  }

  next(timeoutMs = 10_000): Promise<ServerMsg> {
    const head = this.queue.shift();
    if (head !== undefined) return Promise.resolve(head);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        this.waiter = null;
        reject(new Error("timed out waiting for server message"));
      }, timeoutMs);
      this.waiter = (msg) => {
        clearTimeout(timer);
        resolve(msg);
      };
    });
  }

  async expect<T extends ServerMsg["type"]>(type: T): Promise<Extract<ServerMsg, { type: T }>> {
    const msg = await this.next();
    if (msg.type !== type) {
      throw new Error(`expected ${type}, got ${msg.type}: ${JSON.stringify(msg)}`);
    }
    return msg as Extract<ServerMsg, { type: T }>;
  }

  sendPose(pose: ToolPose): number {
    if (this.session === null) throw new Error("no session");
    const seq = this.nextSeq++;
    this.clock += 16;
    this.send({
      v: 1,
      type: "pose_update",
      session: this.session,
      seq,
      t_client: this.clock,
      tool: pose.toWire(),
    });
    return seq;
  }

  sendPedal(): void {
    if (this.session === null) throw new Error("no session");
    this.clock += 120;
    this.send({ v: 1, type: "pedal", session: this.session, t_client: this.clock });
  }
}

// --- ramp planning -------------------------------------------------------------

function swingTwistY(q: Quaternion): { swing: Quaternion; twistAngleRad: number } {
  const n = Math.hypot(q.w, q.y);
  if (n < 1e-12) {
    // pure 180-degree swing; no twist component to strip
    return { swing: q.clone(), twistAngleRad: 0 };
  }
  const twist = new Quaternion(0, q.y / n, 0, q.w / n);
  const swing = q.clone().multiply(twist.clone().invert());
  return { swing, twistAngleRad: 2 * Math.atan2(q.y / n, q.w / n) };
}

function rotvecDeg(q: Quaternion): Vector3 {
  let { w, x, y, z } = q;
  if (w < 0) {
    w = -w; x = -x; y = -y; z = -z;
  }
  const s = Math.hypot(x, y, z);
  if (s < 1e-12) return new Vector3(0, 0, 0);
  const angleDeg = (2 * Math.atan2(s, w) * 180) / Math.PI;
  return new Vector3(x / s, y / s, z / s).multiplyScalar(angleDeg);
}

export interface RampStep {
  /** rotation-drag pointer deltas */
  rotDxPx: number;
  rotDyPx: number;
  /** world displacement for this step, mapped through plane+depth drags */
  move: Vector3;
}

/**
 * Plan a pointer ramp from the current pose toward the target: position
 * interpolates straight, orientation shrinks the swing misalignment along
 * a fixed axis (the bit-axis twist, which the task never grades, is left
 * where it is). Every step is expressible exactly as one rotation drag
 * plus one translation gesture, and each error channel shrinks linearly,
 * so per-channel widget separations can only fall along the ramp.
 */
export function planRamp(
  pose: ToolPose,
  target: WirePose,
  steps: number,
  stopFraction: number,
): RampStep[] {
  const tp = new Vector3(...target.position);
  const [w, x, y, z] = target.orientation;
  const tq = new Quaternion(x, y, z, w).normalize();

  const offset = tq.clone().invert().multiply(pose.quaternion); // target-local offset
  const { swing, twistAngleRad } = swingTwistY(offset);
  const swingVecDeg = rotvecDeg(swing);
  // rotating the correction into the tool's local frame: conjugate by the twist
  const unTwist = new Quaternion().setFromAxisAngle(new Vector3(0, 1, 0), -twistAngleRad);
  const localCorrection = swingVecDeg.clone().applyQuaternion(unTwist);

  const stepRot = localCorrection.clone().multiplyScalar(-stopFraction / steps);
  const stepMove = tp.clone().sub(pose.position).multiplyScalar(stopFraction / steps);
  const out: RampStep[] = [];
  for (let i = 0; i < steps; i++) {
    out.push({
      rotDxPx: stepRot.z / DEG_PER_PIXEL,
      rotDyPx: stepRot.x / DEG_PER_PIXEL,
      move: stepMove.clone(),
    });
  }
  return out;
}

/** Feed one planned step through the production input mapping. */
export function applyRampStep(pose: ToolPose, rig: CameraRig, step: RampStep): void {
  applyRotationDrag(pose, step.rotDxPx, step.rotDyPx);
  const scale = gestureScale(rig, pose.position);
  const a = step.move.dot(cameraRight(rig));
  const b = step.move.dot(cameraUp(rig));
  const c = step.move.dot(cameraForward(rig));
  applyPlaneDrag(pose, rig, scale, a / scale, -b / scale);
  applyDepthDrag(pose, rig, scale, c / scale);
}

/** Deterministic tiny PRNG for varying scripted sessions. */
export function mulberry32(seed: number): () => number {
  let a = seed | 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
