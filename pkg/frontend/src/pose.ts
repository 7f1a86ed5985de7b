/**
 * The client's tool pose and the pointer-to-pose mapping.
 *
 * The pose is input state, not guidance state: the client owns it the way
 * a tracker owns a rigid body, streams it to the engine, and renders only
 * what the engine returns.
 *
 * Every mapping is per pointer pixel, never per frame or per second, so
 * the same pointer path produces the same pose at any event rate. A drag
 * gesture captures its depth scale once at gesture start, which keeps
 * chunked deliveries of one gesture exactly equal to a single delivery.
 */

import { Quaternion, Vector3 } from "three";
import { cameraForward, cameraRight, cameraUp, mmPerPixel, type CameraRig } from "./camera.js";
import type { WirePose } from "./protocol.js";

/** Degrees of tool rotation per pixel of rotation drag. */
export const DEG_PER_PIXEL = 0.25;

/** View-axis millimetres per wheel-delta unit. */
export const MM_PER_WHEEL_UNIT = 0.1;

export class ToolPose {
  position: Vector3;
  quaternion: Quaternion;

  constructor(position?: Vector3, quaternion?: Quaternion) {
    this.position = position?.clone() ?? new Vector3(0, 0, 0);
    this.quaternion = quaternion?.clone() ?? new Quaternion(0, 0, 0, 1);
  }

  clone(): ToolPose {
    return new ToolPose(this.position, this.quaternion);
  }

  setFromWire(pose: WirePose): void {
    this.position.set(pose.position[0], pose.position[1], pose.position[2]);
    const [w, x, y, z] = pose.orientation;
    this.quaternion.set(x, y, z, w).normalize();
  }

  toWire(): WirePose {
    const q = this.quaternion;
    return {
      position: [this.position.x, this.position.y, this.position.z],
      orientation: [q.w, q.x, q.y, q.z],
    };
  }
}

/**
 * Scale for a translation gesture: world mm per pointer pixel for content
 * at the tool's current depth. Captured once per gesture so the cursor
 * and the tool stay locked together for its whole duration.
 */
export function gestureScale(rig: CameraRig, toolPosition: Vector3): number {
  return mmPerPixel(rig, toolPosition.clone().sub(rig.position).length());
}

/** Drag in the camera plane: right follows +x pixels, up follows -y. */
export function applyPlaneDrag(
  pose: ToolPose,
  rig: CameraRig,
  scaleMmPerPx: number,
  dxPx: number,
  dyPx: number,
): void {
  pose.position
    .addScaledVector(cameraRight(rig), dxPx * scaleMmPerPx)
    .addScaledVector(cameraUp(rig), -dyPx * scaleMmPerPx);
}

/** Drag along the view axis; positive pixels push the tool away. */
export function applyDepthDrag(
  pose: ToolPose,
  rig: CameraRig,
  scaleMmPerPx: number,
  dPx: number,
): void {
  pose.position.addScaledVector(cameraForward(rig), dPx * scaleMmPerPx);
}

/**
 * Rotation drag about the tool's local x and z axes: vertical pixels
 * pitch about local x, horizontal pixels roll about local z. The two
 * components form one rotation vector applied as a single rotation, so a
 * straight pointer path gives the same result however it is chunked.
 * There is no mapping onto local y: twist about the bit axis never
 * matters to the task.
 */
export function applyRotationDrag(
  pose: ToolPose,
  dxPx: number,
  dyPx: number,
  degPerPx: number = DEG_PER_PIXEL,
): void {
  const rx = dyPx * degPerPx;
  const rz = dxPx * degPerPx;
  const angleDeg = Math.hypot(rx, rz);
  if (angleDeg === 0) return;
  const axis = new Vector3(rx / angleDeg, 0, rz / angleDeg);
  const local = new Quaternion().setFromAxisAngle(axis, (angleDeg * Math.PI) / 180);
  pose.quaternion.multiply(local).normalize();
}
