import type { WorldFrame } from "./types.js";

// Minimal slice of CanvasRenderingContext2D the renderer needs; tests use a
// recording fake, the browser passes the real context.
export interface Canvas2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

// Top-down view of the default table; one world meter maps to scale pixels.
export const TABLE_BOUNDS = { x: [-0.4, 0.4], y: [-0.4, 0.4] };

const BRICK_PIXELS: Record<string, number> = { tall: 26, short: 18 };

function projector(width: number, height: number) {
  const spanX = TABLE_BOUNDS.x[1] - TABLE_BOUNDS.x[0];
  const spanY = TABLE_BOUNDS.y[1] - TABLE_BOUNDS.y[0];
  const scale = Math.min(width / spanX, height / spanY) * 0.92;
  const cx = width / 2;
  const cy = height / 2;
  // +x right, +y up (screen y grows downward)
  return (wx: number, wy: number): [number, number] => [cx + wx * scale, cy - wy * scale];
}

export function renderWorkspace(
  ctx: Canvas2DLike,
  frame: WorldFrame,
  width: number,
  height: number,
): void {
  const project = projector(width, height);
  ctx.clearRect(0, 0, width, height);

  // table surface
  const [left, top] = project(TABLE_BOUNDS.x[0], TABLE_BOUNDS.y[1]);
  const [right, bottom] = project(TABLE_BOUNDS.x[1], TABLE_BOUNDS.y[0]);
  ctx.fillStyle = "#f4ead8";
  ctx.fillRect(left, top, right - left, bottom - top);
  ctx.strokeStyle = "#8a7b5c";
  ctx.lineWidth = 2;
  ctx.strokeRect(left, top, right - left, bottom - top);

  for (const brick of frame.bricks) {
    const size = BRICK_PIXELS[brick.size_class] ?? 18;
    const [bx, by] = project(brick.translation[0], brick.translation[1]);
    ctx.fillStyle = brick.color;
    ctx.fillRect(bx - size / 2, by - size / 2, size, size);
    if (frame.robot.held === brick.name) {
      ctx.strokeStyle = "red";
      ctx.lineWidth = 3;
      ctx.strokeRect(bx - size / 2 - 3, by - size / 2 - 3, size + 6, size + 6);
    } else {
      ctx.strokeStyle = "#333";
      ctx.lineWidth = 1;
      ctx.strokeRect(bx - size / 2, by - size / 2, size, size);
    }
  }

  // tip crosshair with a numeric z readout
  const [tx, ty] = project(frame.robot.tip_translation[0], frame.robot.tip_translation[1]);
  ctx.strokeStyle = frame.robot.gripper_on ? "#d02020" : "#2040d0";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(tx - 12, ty);
  ctx.lineTo(tx + 12, ty);
  ctx.moveTo(tx, ty - 12);
  ctx.lineTo(tx, ty + 12);
  ctx.stroke();
  ctx.fillStyle = "#222";
  ctx.font = "12px monospace";
  ctx.fillText(`z=${frame.robot.tip_translation[2].toFixed(3)}`, tx + 14, ty - 6);
  ctx.fillText(`latch=${frame.robot.latch}`, tx + 14, ty + 12);
}
