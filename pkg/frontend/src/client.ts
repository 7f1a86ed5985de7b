/**
 * Session client: drives one guidance session over a Transport.
 *
 * Incoming frames are conflated client-side as well as server-side: the
 * render loop asks for the latest frame when it is ready to draw, and
 * intermediate frames that arrived since the last draw are skipped.
 * Bookkeeping messages (trial_advance, session_summary, error) are never
 * dropped; they surface through callbacks in arrival order.
 */

import {
  encodeClientMsg,
  parseServerMsg,
  PROTOCOL_VERSION,
  type ConditionName,
  type ErrorMsg,
  type FrameMsg,
  type SessionSummaryMsg,
  type TrialAdvanceMsg,
  type WirePose,
} from "./protocol.js";
import type { Transport } from "./transport.js";

export interface ClientCallbacks {
  onTrialAdvance?: (msg: TrialAdvanceMsg) => void;
  onSessionSummary?: (msg: SessionSummaryMsg) => void;
  onError?: (msg: ErrorMsg) => void;
  /** Every frame as it arrives, before conflation. Tests sample here. */
  onFrame?: (msg: FrameMsg) => void;
  onClose?: () => void;
}

export interface StartParams {
  condition: ConditionName;
  seed?: number;
  subject?: number;
  widget?: Record<string, number>;
}

export class GuidanceClient {
  private transport: Transport;
  private callbacks: ClientCallbacks;
  private latestFrame: FrameMsg | null = null;
  private nextSeq = 0;
  private adopting = false;

  sessionId: string | null = null;

  constructor(transport: Transport, callbacks: ClientCallbacks = {}) {
    this.transport = transport;
    this.callbacks = callbacks;
    transport.onMessage((text) => this.handle(text));
    transport.onClose(() => this.callbacks.onClose?.());
  }

  startSession(params: StartParams): void {
    this.sessionId = null;
    this.latestFrame = null;
    this.nextSeq = 0;
    this.adopting = true;
    this.transport.send(
      encodeClientMsg({ v: PROTOCOL_VERSION, type: "start_session", ...params }),
    );
  }

  sendPose(tool: WirePose, tClient: number): number {
    if (this.sessionId === null) throw new Error("no active session");
    const seq = this.nextSeq++;
    this.transport.send(
      encodeClientMsg({
        v: PROTOCOL_VERSION,
        type: "pose_update",
        session: this.sessionId,
        seq,
        t_client: tClient,
        tool,
      }),
    );
    return seq;
  }

  pedal(tClient: number): void {
    if (this.sessionId === null) throw new Error("no active session");
    this.transport.send(
      encodeClientMsg({
        v: PROTOCOL_VERSION,
        type: "pedal",
        session: this.sessionId,
        t_client: tClient,
      }),
    );
  }

  endSession(): void {
    if (this.sessionId === null) return;
    this.transport.send(
      encodeClientMsg({ v: PROTOCOL_VERSION, type: "end_session", session: this.sessionId }),
    );
  }

  /** Latest frame since the previous take, or null if none arrived. */
  takeFrame(): FrameMsg | null {
    const frame = this.latestFrame;
    this.latestFrame = null;
    return frame;
  }

  close(): void {
    this.transport.close();
  }

  private handle(text: string): void {
    const msg = parseServerMsg(text);
    if (msg === null) return; // not a v1 server message; ignore
    switch (msg.type) {
      case "frame":
        if (msg.session === this.sessionId) {
          this.latestFrame = msg;
          this.callbacks.onFrame?.(msg);
        }
        break;
      case "trial_advance":
        // the first trial_advance after start_session names the session
        if (this.adopting && msg.trial_index === 0) {
          this.sessionId = msg.session;
          this.adopting = false;
        }
        if (msg.session === this.sessionId) this.callbacks.onTrialAdvance?.(msg);
        break;
      case "session_summary":
        if (msg.session === this.sessionId) {
          this.sessionId = null;
          this.latestFrame = null;
          this.callbacks.onSessionSummary?.(msg);
        }
        break;
      case "error":
        this.callbacks.onError?.(msg);
        break;
    }
  }
}
