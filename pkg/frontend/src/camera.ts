/**
 * Pinhole camera math shared by the renderer, the input mapper, and the
 * loupe inset. Pure functions over plain state so the mapping from
 * pointer pixels to world millimetres is testable without a GPU.
 *
 * Convention matches the renderer: the camera looks along its local -z,
 * +y is up, `fovDeg` is the vertical field of view.
 */

import { Quaternion, Vector3 } from "three";

export interface CameraRig {
  position: Vector3;
  quaternion: Quaternion;
  fovDeg: number;
  viewportW: number;
  viewportH: number;
}

export function cameraLookAt(
  position: Vector3,
  target: Vector3,
  fovDeg: number,
  viewportW: number,
  viewportH: number,
): CameraRig {
  const forward = target.clone().sub(position).normalize();
  // basis with -z = forward, re-orthogonalized against world up
  const worldUp = new Vector3(0, 1, 0);
  let right = forward.clone().cross(worldUp);
  if (right.lengthSq() < 1e-12) right = new Vector3(1, 0, 0);
  right.normalize();
  const up = right.clone().cross(forward).normalize();
  const m = [
    right.x, up.x, -forward.x,
    right.y, up.y, -forward.y,
    right.z, up.z, -forward.z,
  ];
  const q = quatFromColumns(m);
  return { position: position.clone(), quaternion: q, fovDeg, viewportW, viewportH };
}

/** Rotation matrix given in column-major 3x3 → unit quaternion. */
function quatFromColumns(m: number[]): Quaternion {
  // rows of the matrix as stored above: m[0..2] is column 0 (right), etc.
  const r00 = m[0]!, r01 = m[3]!, r02 = m[6]!;
  const r10 = m[1]!, r11 = m[4]!, r12 = m[7]!;
  const r20 = m[2]!, r21 = m[5]!, r22 = m[8]!;
  const trace = r00 + r11 + r22;
  let w: number, x: number, y: number, z: number;
  if (trace > 0) {
    const s = Math.sqrt(trace + 1.0) * 2;
    w = s / 4; x = (r21 - r12) / s; y = (r02 - r20) / s; z = (r10 - r01) / s;
  } else if (r00 > r11 && r00 > r22) {
    const s = Math.sqrt(1.0 + r00 - r11 - r22) * 2;
    w = (r21 - r12) / s; x = s / 4; y = (r01 + r10) / s; z = (r02 + r20) / s;
  } else if (r11 > r22) {
    const s = Math.sqrt(1.0 + r11 - r00 - r22) * 2;
    w = (r02 - r20) / s; x = (r01 + r10) / s; y = s / 4; z = (r12 + r21) / s;
  } else {
    const s = Math.sqrt(1.0 + r22 - r00 - r11) * 2;
    w = (r10 - r01) / s; x = (r02 + r20) / s; y = (r12 + r21) / s; z = s / 4;
  }
  return new Quaternion(x, y, z, w).normalize();
}

export function cameraRight(rig: CameraRig): Vector3 {
  return new Vector3(1, 0, 0).applyQuaternion(rig.quaternion);
}

export function cameraUp(rig: CameraRig): Vector3 {
  return new Vector3(0, 1, 0).applyQuaternion(rig.quaternion);
}

export function cameraForward(rig: CameraRig): Vector3 {
  return new Vector3(0, 0, -1).applyQuaternion(rig.quaternion);
}

/**
 * World millimetres spanned by one vertical pixel for content at
 * `distance` in front of the camera. The inverse of "pixels per mm".
 */
export function mmPerPixel(rig: CameraRig, distance: number): number {
  const halfWorld = distance * Math.tan((rig.fovDeg * Math.PI) / 360);
  return (2 * halfWorld) / rig.viewportH;
}

/**
 * Vertical fov for a magnifier viewport: content at the shared focus
 * distance covers `magnification` times as many pixels per millimetre as
 * in the main view.
 */
export function loupeFovDeg(
  mainFovDeg: number,
  mainViewportH: number,
  loupeViewportH: number,
  magnification: number,
): number {
  const t = Math.tan((mainFovDeg * Math.PI) / 360) * (loupeViewportH / mainViewportH) / magnification;
  return (Math.atan(t) * 360) / Math.PI;
}

/**
 * Project a world point to pixel coordinates (origin top-left, y down).
 * Returns null for points at or behind the camera plane.
 */
export function projectToPixels(rig: CameraRig, point: Vector3): { x: number; y: number } | null {
  const inv = rig.quaternion.clone().invert();
  const local = point.clone().sub(rig.position).applyQuaternion(inv);
  if (local.z >= -1e-9) return null;
  const depth = -local.z;
  const tanHalf = Math.tan((rig.fovDeg * Math.PI) / 360);
  const aspect = rig.viewportW / rig.viewportH;
  const ndcX = local.x / (depth * tanHalf * aspect);
  const ndcY = local.y / (depth * tanHalf);
  return {
    x: ((ndcX + 1) / 2) * rig.viewportW,
    y: ((1 - ndcY) / 2) * rig.viewportH,
  };
}
