/**
 * Application bootstrap: wires the transport, session client, scene, and
 * input together. Run `npm run build` and serve this directory
 * statically; the engine side is `drillguide serve`.
 */

import { Chime } from "./audio.js";
import { GuidanceClient } from "./client.js";
import { downloadCsv } from "./csv.js";
import { InputBindings } from "./input.js";
import { ToolPose } from "./pose.js";
import type { ConditionName } from "./protocol.js";
import { SceneModel } from "./sceneState.js";
import { ThreeScene } from "./threeScene.js";
import { WebSocketTransport } from "./transport.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("view");
const loupeCanvas = el<HTMLCanvasElement>("loupe");
const hudCondition = el<HTMLSpanElement>("hud-condition");
const hudTrial = el<HTMLSpanElement>("hud-trial");
const hudElapsed = el<HTMLSpanElement>("hud-elapsed");
const hudError = el<HTMLSpanElement>("hud-error");
const toast = el<HTMLDivElement>("toast");
const overlay = el<HTMLDivElement>("overlay");
const overlayText = el<HTMLParagraphElement>("overlay-text");
const urlInput = el<HTMLInputElement>("server-url");
const connectBtn = el<HTMLButtonElement>("connect");

const scene = new ThreeScene(canvas, loupeCanvas);
const model = new SceneModel();
const pose = new ToolPose();
const chime = new Chime();

let client: GuidanceClient | null = null;
let condition: ConditionName = "DWEP";
let subject = 0;
let poseAdopted = false;
let connected = false;

function showToast(text: string): void {
  toast.textContent = text;
  toast.classList.add("show");
  window.setTimeout(() => toast.classList.remove("show"), 4000);
}

function setOverlay(text: string | null): void {
  if (text === null) {
    overlay.classList.remove("show");
  } else {
    overlayText.textContent = text;
    overlay.classList.add("show");
  }
}

function startSession(): void {
  if (client === null) return;
  poseAdopted = false;
  hudCondition.textContent = condition;
  hudTrial.textContent = "-";
  hudElapsed.textContent = "";
  client.startSession({ condition, subject });
}

function connect(): void {
  connected = false;
  setOverlay("connecting…");
  const transport = new WebSocketTransport(urlInput.value, () => {
    connected = true;
    setOverlay(null);
    startSession();
  });
  client = new GuidanceClient(transport, {
    onTrialAdvance(msg) {
      hudTrial.textContent = `${msg.trial_index + 1} / ${msg.trials_total}`;
      if (msg.elapsed !== null) {
        hudElapsed.textContent = `last trial ${msg.elapsed.toFixed(2)} s`;
        chime.play();
      }
    },
    onSessionSummary(msg) {
      chime.play();
      showToast(`session complete: ${msg.records.length} trials; saving CSV`);
      downloadCsv(`session_${condition}_subject${subject}.csv`, msg.csv);
      subject += 1; // next run records as a fresh subject
      startSession();
    },
    onError(msg) {
      showToast(`server error [${msg.code}]: ${msg.detail}`);
    },
    onClose() {
      connected = false;
      setOverlay("connection lost");
    },
  });
}

const input = new InputBindings(canvas, pose, () => scene.rig(), {
  pedal() {
    if (client?.sessionId != null) client.pedal(performance.now());
  },
  selectCondition(next) {
    condition = next;
    startSession();
  },
  toggleLoupe() {
    scene.loupeOn = !scene.loupeOn;
  },
  gesture() {
    chime.unlock();
  },
});
input.attach();
connectBtn.addEventListener("click", connect);
window.addEventListener("resize", () => scene.resize());

function tick(): void {
  requestAnimationFrame(tick);
  if (client !== null && connected) {
    const frame = client.takeFrame();
    if (frame !== null) {
      model.apply(frame);
      // at session start the server states the standing pose; adopt it
      if (!poseAdopted) {
        const avatar = model.primitive("drill_avatar");
        if (avatar !== null) {
          pose.setFromWire(avatar.pose);
          poseAdopted = true;
        }
      }
      const e = model.errorSummary;
      if (e !== null) {
        hudError.textContent = `pm ${e.pm.toFixed(2)} mm   rm ${e.rm.toFixed(2)}°`;
      }
    }
    if (model.render !== null) scene.syncFrom(model.render);
    if (poseAdopted && input.consumeDirty() && client.sessionId !== null) {
      client.sendPose(pose.toWire(), performance.now());
    }
  }
  scene.render();
}

setOverlay("not connected");
tick();
