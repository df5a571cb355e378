/** Demonstration capture: fixed-rate sampling of the pointer position
 * in world coordinates, monotone timestamps, gripper toggle events, and
 * the finish/abort handshake.
 *
 * The recorder itself is scheduler-agnostic: the browser layer calls
 * sampleNow() from an interval timer, tests call it directly.  Fixed
 * timestamps (sample index / rate) bound the trajectory density before
 * resampling server-side and are monotone by construction.
 */

import type { ApiClient } from "./api.js";
import type { OverrideSummary } from "./types.js";

export type RecorderState = "idle" | "recording" | "finished" | "aborted";

export class TeleopRecorder {
  state: RecorderState = "idle";
  sessionId: string | null = null;
  gripperClosed = false;
  samplesSent = 0;
  onError: (message: string) => void = () => undefined;

  private pointerWorld: { x: number; y: number } | null = null;
  private pendingGripper: "close" | "open" | null = null;
  private sampleIndex = 0;
  private sending: Promise<unknown> = Promise.resolve();

  constructor(private readonly api: ApiClient,
              readonly rateHz: number = 30) {
    if (rateHz < 30) {
      throw new Error("sampling below 30 Hz loses demonstration detail");
    }
  }

  async begin(functionName: string, targetLabel?: string,
              shapeKind?: string): Promise<string> {
    if (this.state === "recording") throw new Error("already recording");
    const reply = await this.api.teleopBegin(functionName, targetLabel, shapeKind);
    this.sessionId = reply.session_id;
    this.state = "recording";
    this.gripperClosed = false;
    this.pendingGripper = null;
    this.pointerWorld = null;
    this.sampleIndex = 0;
    this.samplesSent = 0;
    return reply.session_id;
  }

  /** Latest pointer position in world meters (mapping applied by the
   * canvas layer). */
  pointer(x: number, y: number): void {
    this.pointerWorld = { x, y };
  }

  /** Toggle key: emits a close/open event with the next sample. */
  toggleGripper(): void {
    if (this.state !== "recording") return;
    this.gripperClosed = !this.gripperClosed;
    this.pendingGripper = this.gripperClosed ? "close" : "open";
  }

  /** One fixed-rate tick; serialized so samples arrive in order. */
  sampleNow(): Promise<void> {
    if (this.state !== "recording" || this.pointerWorld === null ||
        this.sessionId === null) {
      return Promise.resolve();
    }
    const t = this.sampleIndex / this.rateHz;
    this.sampleIndex += 1;
    const { x, y } = this.pointerWorld;
    const gripper = this.pendingGripper ?? undefined;
    this.pendingGripper = null;
    const send = this.sending.then(async () => {
      if (this.state !== "recording" || this.sessionId === null) return;
      try {
        await this.api.teleopSample(this.sessionId, t, x, y, gripper);
        this.samplesSent += 1;
      } catch (err) {
        // a partial demonstration must never be fitted silently
        await this.abortOnFailure(err);
      }
    });
    this.sending = send;
    return send;
  }

  private async abortOnFailure(err: unknown): Promise<void> {
    if (this.state !== "recording") return;
    this.state = "aborted";
    const message = err instanceof Error ? err.message : String(err);
    try {
      if (this.sessionId) await this.api.teleopAbort(this.sessionId);
    } catch {
      /* connection already lost; the server times nothing out, the
         operator re-begins explicitly */
    }
    this.onError(`demonstration aborted: ${message}`);
  }

  async finish(): Promise<OverrideSummary> {
    if (this.state !== "recording" || this.sessionId === null) {
      throw new Error("no recording to finish");
    }
    await this.sending;
    if (this.state !== "recording") {
      throw new Error("recording was aborted");
    }
    const summary = await this.api.teleopFinish(this.sessionId);
    this.state = "finished";
    return summary;
  }

  async abort(): Promise<void> {
    if (this.state !== "recording" || this.sessionId === null) return;
    await this.sending;
    this.state = "aborted";
    await this.api.teleopAbort(this.sessionId);
  }
}
