/**
 * The drawable state of the session, exactly as streamed.
 *
 * This model is a mailbox, not a simulator: `apply` stores the frame's
 * render payload verbatim and nothing else ever writes to it. If the
 * stream stops, the picture freezes, however much the pointer moves —
 * that property is what keeps every piece of guidance math on the server.
 */

import type { ErrorSummary, FrameMsg, RenderPayload, WireDuo } from "./protocol.js";

export class SceneModel {
  render: RenderPayload | null = null;
  errorSummary: ErrorSummary | null = null;
  seq: number | null = null;

  apply(frame: FrameMsg): void {
    this.render = frame.render;
    this.errorSummary = frame.error_summary;
    this.seq = frame.seq;
  }

  /**
   * Canonical serialization of everything widget-related that reaches the
   * screen. Two calls bracketing any amount of local input must return
   * identical strings unless a new frame arrived in between.
   */
  widgetStateJson(): string {
    return JSON.stringify(this.render);
  }

  duos(): WireDuo[] {
    return this.render?.duos ?? [];
  }

  /** separation per channel, e.g. {PX: 12.5, ...}; empty before any frame */
  duoSeparations(): Record<string, number> {
    const out: Record<string, number> = {};
    for (const duo of this.duos()) out[duo.channel] = duo.separation;
    return out;
  }

  visibleDuoCount(): number {
    return this.duos().filter((d) => d.area !== "Hidden").length;
  }

  primitive(id: string) {
    return this.render?.primitives.find((p) => p.id === id) ?? null;
  }
}
