/**
 * Confirmation chime played after each pedal. WebAudio needs a user
 * gesture before it may start, so the context is created lazily from an
 * input handler and everything degrades to silence where audio is
 * unavailable (headless runs, autoplay restrictions).
 */

export class Chime {
  private ctx: AudioContext | null = null;

  /** Call from a user-gesture handler. Safe to call repeatedly. */
  unlock(): void {
    if (this.ctx !== null) return;
    const Ctor = (globalThis as { AudioContext?: typeof AudioContext }).AudioContext;
    if (Ctor === undefined) return;
    try {
      this.ctx = new Ctor();
    } catch {
      this.ctx = null;
    }
  }

  play(): void {
    const ctx = this.ctx;
    if (ctx === null || ctx.state !== "running") return;
    const osc = ctx.createOscillator();
    const gain = ctx.createGain();
    osc.type = "sine";
    osc.frequency.value = 880;
    const t = ctx.currentTime;
    gain.gain.setValueAtTime(0.18, t);
    gain.gain.exponentialRampToValueAtTime(1e-4, t + 0.15);
    osc.connect(gain).connect(ctx.destination);
    osc.start(t);
    osc.stop(t + 0.16);
  }
}
