// Top-down canvas rendering: walls + centerline, trailing trace, the car
// as an oriented wedge, and a crash badge.

import { Trace } from "./trace.js";
import { TelemetryFrame, TrackGeometry } from "./types.js";

interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

function fitViewport(track: TrackGeometry, width: number, height: number): Viewport {
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const [x, y] of track.left_wall.concat(track.right_wall)) {
    minX = Math.min(minX, x); maxX = Math.max(maxX, x);
    minY = Math.min(minY, y); maxY = Math.max(maxY, y);
  }
  const margin = 20;
  const scale = Math.min(
    (width - 2 * margin) / (maxX - minX),
    (height - 2 * margin) / (maxY - minY),
  );
  return {
    scale,
    offsetX: width / 2 - scale * (minX + maxX) / 2,
    offsetY: height / 2 + scale * (minY + maxY) / 2,
  };
}

export class TrackView {
  private viewport: Viewport | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly track: TrackGeometry,
    readonly trace: Trace = new Trace(600),
  ) {}

  private toScreen(x: number, y: number): [number, number] {
    const vp = this.viewport!;
    return [vp.offsetX + vp.scale * x, vp.offsetY - vp.scale * y];
  }

  private polyline(ctx: CanvasRenderingContext2D, points: [number, number][], close: boolean): void {
    ctx.beginPath();
    points.forEach(([x, y], index) => {
      const [sx, sy] = this.toScreen(x, y);
      if (index === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    if (close) ctx.closePath();
    ctx.stroke();
  }

  draw(frame: TelemetryFrame | null): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    if (!this.viewport) this.viewport = fitViewport(this.track, width, height);
    ctx.clearRect(0, 0, width, height);

    ctx.lineWidth = 2;
    ctx.strokeStyle = "#555";
    this.polyline(ctx, this.track.left_wall, this.track.closed);
    this.polyline(ctx, this.track.right_wall, this.track.closed);
    ctx.lineWidth = 1;
    ctx.strokeStyle = "#2a4a2a";
    ctx.setLineDash([4, 6]);
    this.polyline(ctx, this.track.centerline, this.track.closed);
    ctx.setLineDash([]);

    const points = this.trace.points();
    if (points.length > 1) {
      ctx.strokeStyle = "#3d85c6";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      points.forEach((point, index) => {
        const [sx, sy] = this.toScreen(point.x, point.y);
        if (index === 0) ctx.moveTo(sx, sy);
        else ctx.lineTo(sx, sy);
      });
      ctx.stroke();
    }

    if (frame) {
      this.trace.push({ x: frame.x, y: frame.y });
      const [cx, cy] = this.toScreen(frame.x, frame.y);
      const heading = -frame.heading; // canvas y is flipped
      const size = 9;
      ctx.fillStyle = frame.crashed ? "#cc2222" : "#e8e8e8";
      ctx.beginPath();
      ctx.moveTo(cx + size * Math.cos(heading), cy + size * Math.sin(heading));
      ctx.lineTo(cx + size * Math.cos(heading + 2.5), cy + size * Math.sin(heading + 2.5));
      ctx.lineTo(cx + size * Math.cos(heading - 2.5), cy + size * Math.sin(heading - 2.5));
      ctx.closePath();
      ctx.fill();

      if (frame.crashed) {
        ctx.fillStyle = "#cc2222";
        ctx.font = "bold 16px monospace";
        ctx.fillText("CRASHED", 12, 24);
      }
    }
  }
}

export function readouts(frame: TelemetryFrame): string {
  return [
    `t ${frame.t.toFixed(1)}s`,
    `v ${frame.v.toFixed(2)} m/s`,
    `n ${frame.n.toFixed(2)} m`,
    `wall L ${frame.d_left.toFixed(2)} / R ${frame.d_right.toFixed(2)} m`,
    `params ${frame.params_hash}`,
  ].join("   ");
}
