/** Canvas renderer for the desk scene: workspace frame, shape-coded
 * objects (bowls visibly distinct), the end effector with its held
 * object, and the trajectory trace while a motion replays. */

import { CanvasMapping } from "./mapping.js";
import type { ObjectView, WorldSnapshot } from "./types.js";

const COLORS: Record<string, string> = {
  box: "#8d6e63",
  cylinder: "#5c9ded",
  bowl: "#e4b34c",
  door: "#9b7fd4",
};

export function isValidSnapshot(doc: unknown): doc is WorldSnapshot {
  const snap = doc as WorldSnapshot;
  return Boolean(
    snap &&
    snap.kind === "world_snapshot" &&
    snap.robot && Number.isFinite(snap.robot.x) && Number.isFinite(snap.robot.y) &&
    Array.isArray(snap.objects) &&
    Array.isArray(snap.workspace) && snap.workspace.length === 4,
  );
}

export class SceneRenderer {
  private mapping: CanvasMapping | null = null;
  private lastGood: WorldSnapshot | null = null;
  trace: { x: number; y: number }[] = [];

  constructor(private readonly canvas: HTMLCanvasElement) {}

  /** Mapping for the current snapshot's workspace (pointer handling
   * uses the same instance, keeping capture and display consistent). */
  currentMapping(): CanvasMapping | null {
    return this.mapping;
  }

  lastSnapshot(): WorldSnapshot | null {
    return this.lastGood;
  }

  /** Renders a snapshot; a malformed one keeps the last good frame and
   * returns false so the caller can show an error banner. */
  render(doc: unknown): boolean {
    if (!isValidSnapshot(doc)) {
      if (this.lastGood) this.draw(this.lastGood);
      return false;
    }
    this.lastGood = doc;
    this.draw(doc);
    return true;
  }

  clearTrace(): void {
    this.trace = [];
  }

  private draw(snap: WorldSnapshot): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    this.mapping = new CanvasMapping(snap.workspace, this.canvas.width,
                                     this.canvas.height);
    const m = this.mapping;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);

    // workspace frame
    const tl = m.worldToPixel(snap.workspace[0], snap.workspace[3]);
    const br = m.worldToPixel(snap.workspace[2], snap.workspace[1]);
    ctx.fillStyle = "#11151c";
    ctx.fillRect(tl.px, tl.py, br.px - tl.px, br.py - tl.py);
    ctx.strokeStyle = "#3b4a5f";
    ctx.strokeRect(tl.px, tl.py, br.px - tl.px, br.py - tl.py);

    for (const obj of snap.objects) this.drawObject(ctx, m, obj);

    // replay trace under the effector marker
    if (this.trace.length > 1) {
      ctx.beginPath();
      const first = m.worldToPixel(this.trace[0].x, this.trace[0].y);
      ctx.moveTo(first.px, first.py);
      for (const p of this.trace.slice(1)) {
        const q = m.worldToPixel(p.x, p.y);
        ctx.lineTo(q.px, q.py);
      }
      ctx.strokeStyle = "#69d2a0";
      ctx.lineWidth = 1.5;
      ctx.stroke();
      ctx.lineWidth = 1;
    }

    this.drawRobot(ctx, m, snap);
  }

  private drawObject(ctx: CanvasRenderingContext2D, m: CanvasMapping,
                     obj: ObjectView): void {
    const { px, py } = m.worldToPixel(obj.x, obj.y);
    const r = Math.max(4, m.metersToPixels(obj.grasp_width / 2));
    ctx.fillStyle = COLORS[obj.kind] ?? "#888";
    ctx.strokeStyle = "#0b0e13";
    switch (obj.kind) {
      case "box":
        ctx.fillRect(px - r, py - r, 2 * r, 2 * r);
        ctx.strokeRect(px - r, py - r, 2 * r, 2 * r);
        break;
      case "cylinder":
        ctx.beginPath();
        ctx.arc(px, py, r, 0, 2 * Math.PI);
        ctx.fill();
        ctx.stroke();
        break;
      case "bowl": {
        // a bowl reads as a ring: rim outside, hollow center
        ctx.beginPath();
        ctx.arc(px, py, r, 0, 2 * Math.PI);
        ctx.fill();
        ctx.stroke();
        ctx.fillStyle = "#11151c";
        ctx.beginPath();
        ctx.arc(px, py, r * 0.55, 0, 2 * Math.PI);
        ctx.fill();
        break;
      }
      case "door": {
        const len = Math.max(12, m.metersToPixels(0.08));
        ctx.save();
        ctx.translate(px, py);
        ctx.rotate(-(obj.yaw + obj.angle));
        ctx.fillRect(0, -2, len, 4);
        ctx.restore();
        ctx.beginPath();
        ctx.arc(px, py, 3, 0, 2 * Math.PI);
        ctx.fill();
        break;
      }
      default:
        ctx.beginPath();
        ctx.arc(px, py, r, 0, 2 * Math.PI);
        ctx.fill();
    }
    ctx.fillStyle = "#aab7c9";
    ctx.font = "11px sans-serif";
    ctx.fillText(obj.label, px + r + 3, py + 3);
  }

  private drawRobot(ctx: CanvasRenderingContext2D, m: CanvasMapping,
                    snap: WorldSnapshot): void {
    const { px, py } = m.worldToPixel(snap.robot.x, snap.robot.y);
    ctx.beginPath();
    ctx.arc(px, py, 7, 0, 2 * Math.PI);
    ctx.fillStyle = snap.robot.holding ? "#69d2a0" : "#e8edf4";
    ctx.fill();
    ctx.strokeStyle = "#0b0e13";
    ctx.stroke();
    if (snap.robot.holding) {
      // held object is slaved to the effector: draw the linkage
      const held = snap.objects.find((o) => o.label === snap.robot.holding);
      if (held) {
        const hp = m.worldToPixel(held.x, held.y);
        ctx.beginPath();
        ctx.moveTo(px, py);
        ctx.lineTo(hp.px, hp.py);
        ctx.strokeStyle = "#69d2a0";
        ctx.stroke();
      }
    }
    ctx.fillStyle = "#aab7c9";
    ctx.font = "11px sans-serif";
    ctx.fillText(snap.robot.gripper, px + 10, py - 8);
  }
}
