/**
 * WebGL presentation of the streamed render payload.
 *
 * Every guidance element on screen is a verbatim materialization of a
 * wire primitive: pose, scale, and color are applied as received, ids map
 * one-to-one to scene objects, and ids that leave the stream leave the
 * scene. The only locally owned visuals are stage dressing: lights, the
 * phantom block standing in for the jaw, and the ground grid.
 */

import * as THREE from "three";
import { cameraLookAt, loupeFovDeg, type CameraRig } from "./camera.js";
import type { RenderPayload, WirePrimitive } from "./protocol.js";

const CAMERA_POS = new THREE.Vector3(150, 130, 270);
const CAMERA_FOCUS = new THREE.Vector3(0, 45, 0);
const CAMERA_FOV = 45;
const LOUPE_MAGNIFICATION = 2.0;

export class ThreeScene {
  private renderer: THREE.WebGLRenderer;
  private loupeRenderer: THREE.WebGLRenderer;
  private scene: THREE.Scene;
  private camera: THREE.PerspectiveCamera;
  private loupeCamera: THREE.PerspectiveCamera;
  private byId = new Map<string, THREE.Object3D>();
  private canvas: HTMLCanvasElement;
  private loupeCanvas: HTMLCanvasElement;
  loupeOn = true;

  constructor(canvas: HTMLCanvasElement, loupeCanvas: HTMLCanvasElement) {
    this.canvas = canvas;
    this.loupeCanvas = loupeCanvas;
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.loupeRenderer = new THREE.WebGLRenderer({ canvas: loupeCanvas, antialias: true });
    this.scene = new THREE.Scene();
    this.scene.background = new THREE.Color(0x10141a);

    this.camera = new THREE.PerspectiveCamera(CAMERA_FOV, 1, 1, 2000);
    this.camera.position.copy(CAMERA_POS);
    this.camera.lookAt(CAMERA_FOCUS);
    this.loupeCamera = new THREE.PerspectiveCamera(CAMERA_FOV, 1, 1, 2000);

    const key = new THREE.DirectionalLight(0xffffff, 2.2);
    key.position.set(120, 300, 160);
    this.scene.add(key);
    this.scene.add(new THREE.AmbientLight(0xb8c4d4, 0.8));

    const grid = new THREE.GridHelper(400, 20, 0x2a3342, 0x1d2430);
    grid.position.y = -40;
    this.scene.add(grid);
    this.scene.add(makePhantom());
    this.resize();
  }

  /** Camera state for the input mapper, in plain math form. */
  rig(): CameraRig {
    return cameraLookAt(
      CAMERA_POS,
      CAMERA_FOCUS,
      CAMERA_FOV,
      this.canvas.clientWidth || this.canvas.width,
      this.canvas.clientHeight || this.canvas.height,
    );
  }

  resize(): void {
    const w = this.canvas.clientWidth || 800;
    const h = this.canvas.clientHeight || 600;
    this.renderer.setSize(w, h, false);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
    const lw = this.loupeCanvas.clientWidth || 220;
    this.loupeRenderer.setSize(lw, lw, false);
    this.loupeCamera.aspect = 1;
    this.loupeCamera.fov = loupeFovDeg(CAMERA_FOV, h, lw, LOUPE_MAGNIFICATION);
    this.loupeCamera.updateProjectionMatrix();
  }

  /** Mirror the streamed payload into the scene graph. */
  syncFrom(render: RenderPayload): void {
    const seen = new Set<string>();
    for (const prim of render.primitives) {
      seen.add(prim.id);
      let obj = this.byId.get(prim.id);
      if (obj === undefined) {
        obj = buildPrimitive(prim);
        this.byId.set(prim.id, obj);
        this.scene.add(obj);
      }
      applyPose(obj, prim);
    }
    for (const [id, obj] of this.byId) {
      if (!seen.has(id)) {
        this.scene.remove(obj);
        this.byId.delete(id);
      }
    }
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
    this.loupeCanvas.style.display = this.loupeOn ? "block" : "none";
    if (this.loupeOn) {
      // rigid head attachment: same pose as the main camera, narrow fov
      this.loupeCamera.position.copy(this.camera.position);
      this.loupeCamera.quaternion.copy(this.camera.quaternion);
      this.loupeRenderer.render(this.scene, this.loupeCamera);
    }
  }
}

function applyPose(obj: THREE.Object3D, prim: WirePrimitive): void {
  obj.position.set(prim.pose.position[0], prim.pose.position[1], prim.pose.position[2]);
  const [w, x, y, z] = prim.pose.orientation;
  obj.quaternion.set(x, y, z, w);
  // zero-length discs still need a visible slab
  const sy = prim.scale[1] === 0 ? 0.6 : prim.scale[1];
  obj.scale.set(prim.scale[0], sy, prim.scale[2]);
  obj.traverse((child) => {
    if (child instanceof THREE.Mesh) {
      const mat = child.material as THREE.MeshStandardMaterial;
      if (mat.userData.tinted === true) mat.color.set(prim.color);
    }
  });
}

function makeMaterial(prim: WirePrimitive, tinted: boolean): THREE.MeshStandardMaterial {
  const mat = new THREE.MeshStandardMaterial({
    color: tinted ? prim.color : "#777777",
    roughness: 0.55,
    metalness: 0.15,
  });
  mat.userData.tinted = tinted;
  if (prim.depth_test_exempt) {
    mat.depthTest = false;
    mat.transparent = true;
    mat.opacity = 0.95;
  }
  return mat;
}

function buildPrimitive(prim: WirePrimitive): THREE.Object3D {
  let obj: THREE.Object3D;
  switch (prim.shape) {
    case "cylinder":
    case "disc":
      obj = new THREE.Mesh(new THREE.CylinderGeometry(1, 1, 1, 28), makeMaterial(prim, true));
      break;
    case "v-form":
      obj = new THREE.Mesh(vFormGeometry(), makeMaterial(prim, true));
      break;
    case "paren-form":
      obj = new THREE.Mesh(parenFormGeometry(), makeMaterial(prim, true));
      break;
    case "drill-avatar":
      obj = makeDrillAvatar(prim);
      break;
    default:
      obj = new THREE.Mesh(new THREE.BoxGeometry(1, 1, 1), makeMaterial(prim, true));
  }
  if (prim.depth_test_exempt) obj.renderOrder = 10;
  obj.name = prim.id;
  return obj;
}

/** Chevron glyph in the local xy plane, one unit tall, extruded. */
function vFormGeometry(): THREE.ExtrudeGeometry {
  const s = new THREE.Shape();
  s.moveTo(-0.5, 0.5);
  s.lineTo(0, -0.5);
  s.lineTo(0.5, 0.5);
  s.lineTo(0.27, 0.5);
  s.lineTo(0, -0.14);
  s.lineTo(-0.27, 0.5);
  s.closePath();
  const geo = new THREE.ExtrudeGeometry(s, { depth: 0.25, bevelEnabled: false });
  geo.translate(0, 0, -0.125);
  return geo;
}

/** Opening-bracket glyph: an annulus sector, extruded. */
function parenFormGeometry(): THREE.ExtrudeGeometry {
  const s = new THREE.Shape();
  const a0 = (120 * Math.PI) / 180;
  const a1 = (240 * Math.PI) / 180;
  s.absarc(0, 0, 0.5, a0, a1, false);
  s.absarc(0, 0, 0.34, a1, a0, true);
  s.closePath();
  const geo = new THREE.ExtrudeGeometry(s, { depth: 0.25, bevelEnabled: false });
  geo.translate(0, 0, -0.125);
  return geo;
}

/**
 * Stylized handpiece. The group origin is the bit tip, the bit runs along
 * local +y, the body hangs below it (the tool disc streams in at -y).
 */
function makeDrillAvatar(prim: WirePrimitive): THREE.Group {
  const group = new THREE.Group();
  const body = new THREE.Mesh(
    new THREE.CylinderGeometry(4.5, 4.5, 42, 24),
    makeMaterial(prim, true),
  );
  body.position.y = -33;
  const collet = new THREE.Mesh(
    new THREE.CylinderGeometry(2.0, 3.2, 10, 24),
    makeMaterial(prim, false),
  );
  collet.position.y = -7;
  const bit = new THREE.Mesh(
    new THREE.CylinderGeometry(0.7, 0.7, 12, 12),
    new THREE.MeshStandardMaterial({ color: "#d8dde4", roughness: 0.3, metalness: 0.7 }),
  );
  bit.position.y = -1;
  group.add(body, collet, bit);
  return group;
}

/** Local stage dressing: a stand-in block for the jaw under the targets. */
function makePhantom(): THREE.Group {
  const group = new THREE.Group();
  const mat = new THREE.MeshStandardMaterial({ color: 0x8a7f72, roughness: 0.9 });
  const slab = new THREE.Mesh(new THREE.BoxGeometry(96, 16, 72), mat);
  slab.position.set(0, -32, 0);
  const ridge = new THREE.Mesh(new THREE.TorusGeometry(30, 9, 14, 28, Math.PI), mat);
  ridge.rotation.x = -Math.PI / 2;
  ridge.position.set(0, -24, 8);
  group.add(slab, ridge);
  return group;
}
