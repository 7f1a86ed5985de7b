/**
 * DOM bindings: pointer and keyboard events to tool-pose mutations and
 * session actions.
 *
 *   drag                  translate in the camera plane
 *   Shift+drag (vertical) translate along the view axis
 *   Alt+drag / right-drag rotate about the tool's local x (vertical px)
 *                         and local z (horizontal px)
 *   wheel                 translate along the view axis
 *   Space                 pedal
 *   1..4                  switch condition (starts a fresh session)
 *   L                     toggle the loupe inset
 */

import type { CameraRig } from "./camera.js";
import { CONDITIONS, type ConditionName } from "./protocol.js";
import {
  applyDepthDrag,
  applyPlaneDrag,
  applyRotationDrag,
  gestureScale,
  MM_PER_WHEEL_UNIT,
  ToolPose,
} from "./pose.js";

export interface InputActions {
  pedal(): void;
  selectCondition(condition: ConditionName): void;
  toggleLoupe(): void;
  /** Any user gesture; used to unlock audio. */
  gesture(): void;
}

type DragMode = "plane" | "depth" | "rotate";

export class InputBindings {
  private el: HTMLElement;
  private pose: ToolPose;
  private rig: () => CameraRig;
  private actions: InputActions;
  private dragging = false;
  private mode: DragMode = "plane";
  private lastX = 0;
  private lastY = 0;
  private scale = 1; // mm per px, captured at gesture start
  private dirty = false;

  constructor(el: HTMLElement, pose: ToolPose, rig: () => CameraRig, actions: InputActions) {
    this.el = el;
    this.pose = pose;
    this.rig = rig;
    this.actions = actions;
  }

  /** True once since the last call if local input moved the pose. */
  consumeDirty(): boolean {
    const was = this.dirty;
    this.dirty = false;
    return was;
  }

  attach(): void {
    this.el.addEventListener("pointerdown", this.onPointerDown);
    this.el.addEventListener("pointermove", this.onPointerMove);
    this.el.addEventListener("pointerup", this.onPointerUp);
    this.el.addEventListener("pointercancel", this.onPointerUp);
    this.el.addEventListener("wheel", this.onWheel, { passive: false });
    this.el.addEventListener("contextmenu", this.onContextMenu);
    window.addEventListener("keydown", this.onKeyDown);
  }

  detach(): void {
    this.el.removeEventListener("pointerdown", this.onPointerDown);
    this.el.removeEventListener("pointermove", this.onPointerMove);
    this.el.removeEventListener("pointerup", this.onPointerUp);
    this.el.removeEventListener("pointercancel", this.onPointerUp);
    this.el.removeEventListener("wheel", this.onWheel);
    this.el.removeEventListener("contextmenu", this.onContextMenu);
    window.removeEventListener("keydown", this.onKeyDown);
  }

  private onPointerDown = (ev: PointerEvent): void => {
    this.actions.gesture();
    this.dragging = true;
    this.lastX = ev.clientX;
    this.lastY = ev.clientY;
    if (ev.button === 2 || ev.altKey) this.mode = "rotate";
    else if (ev.shiftKey) this.mode = "depth";
    else this.mode = "plane";
    this.scale = gestureScale(this.rig(), this.pose.position);
    this.el.setPointerCapture(ev.pointerId);
  };

  private onPointerMove = (ev: PointerEvent): void => {
    if (!this.dragging) return;
    const dx = ev.clientX - this.lastX;
    const dy = ev.clientY - this.lastY;
    this.lastX = ev.clientX;
    this.lastY = ev.clientY;
    if (dx === 0 && dy === 0) return;
    switch (this.mode) {
      case "plane":
        applyPlaneDrag(this.pose, this.rig(), this.scale, dx, dy);
        break;
      case "depth":
        applyDepthDrag(this.pose, this.rig(), this.scale, -dy);
        break;
      case "rotate":
        applyRotationDrag(this.pose, dx, dy);
        break;
    }
    this.dirty = true;
  };

  private onPointerUp = (ev: PointerEvent): void => {
    this.dragging = false;
    if (this.el.hasPointerCapture(ev.pointerId)) this.el.releasePointerCapture(ev.pointerId);
  };

  private onWheel = (ev: WheelEvent): void => {
    ev.preventDefault();
    this.actions.gesture();
    const rig = this.rig();
    applyDepthDrag(this.pose, rig, MM_PER_WHEEL_UNIT, -ev.deltaY);
    this.dirty = true;
  };

  private onContextMenu = (ev: Event): void => {
    ev.preventDefault();
  };

  private onKeyDown = (ev: KeyboardEvent): void => {
    if (ev.repeat) return;
    this.actions.gesture();
    if (ev.code === "Space") {
      ev.preventDefault();
      this.actions.pedal();
      return;
    }
    if (ev.code === "KeyL") {
      this.actions.toggleLoupe();
      return;
    }
    const digit = /^Digit([1-4])$/.exec(ev.code);
    if (digit !== null) {
      const condition = CONDITIONS[Number(digit[1]) - 1];
      if (condition !== undefined) this.actions.selectCondition(condition);
    }
  };
}
