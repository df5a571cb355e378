/** Affine, invertible canvas-to-world mapping.
 *
 * Uniform scale (letterboxed) so meters stay square on screen; the
 * vertical axis flips because canvas y grows downward while the
 * workspace y grows upward.
 */

export interface Pixel {
  px: number;
  py: number;
}

export interface WorldPoint {
  x: number;
  y: number;
}

export class CanvasMapping {
  readonly scale: number; // pixels per meter
  private readonly offsetX: number;
  private readonly offsetY: number;
  private readonly ymax: number;
  private readonly ymin: number;
  private readonly xmin: number;

  constructor(
    readonly workspace: [number, number, number, number],
    readonly widthPx: number,
    readonly heightPx: number,
    margin = 10,
  ) {
    const [xmin, ymin, xmax, ymax] = workspace;
    if (!(xmax > xmin) || !(ymax > ymin)) {
      throw new Error(`degenerate workspace ${workspace}`);
    }
    const usableW = widthPx - 2 * margin;
    const usableH = heightPx - 2 * margin;
    this.scale = Math.min(usableW / (xmax - xmin), usableH / (ymax - ymin));
    const spanX = (xmax - xmin) * this.scale;
    const spanY = (ymax - ymin) * this.scale;
    this.offsetX = (widthPx - spanX) / 2;
    this.offsetY = (heightPx - spanY) / 2;
    this.xmin = xmin;
    this.ymin = ymin;
    this.ymax = ymax;
  }

  worldToPixel(x: number, y: number): Pixel {
    return {
      px: this.offsetX + (x - this.xmin) * this.scale,
      py: this.offsetY + (this.ymax - y) * this.scale,
    };
  }

  pixelToWorld(px: number, py: number): WorldPoint {
    return {
      x: this.xmin + (px - this.offsetX) / this.scale,
      y: this.ymax - (py - this.offsetY) / this.scale,
    };
  }

  metersToPixels(meters: number): number {
    return meters * this.scale;
  }
}
