import type { Canvas2DLike } from "../src/workspace.js";
import type { WorldFrame } from "../src/types.js";
import type { WebSocketLike } from "../src/app.js";

// Records every draw call so tests can assert on what was rendered.
export class RecordingContext implements Canvas2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  font = "";
  ops: { op: string; args: unknown[]; fillStyle?: unknown; strokeStyle?: unknown }[] = [];

  private record(op: string, ...args: unknown[]) {
    this.ops.push({ op, args, fillStyle: this.fillStyle, strokeStyle: this.strokeStyle });
  }

  clearRect(...args: number[]) { this.record("clearRect", ...args); }
  fillRect(...args: number[]) { this.record("fillRect", ...args); }
  strokeRect(...args: number[]) { this.record("strokeRect", ...args); }
  beginPath() { this.record("beginPath"); }
  moveTo(...args: number[]) { this.record("moveTo", ...args); }
  lineTo(...args: number[]) { this.record("lineTo", ...args); }
  stroke() { this.record("stroke"); }
  fillText(...args: unknown[]) { this.record("fillText", ...args); }

  count(op: string): number {
    return this.ops.filter((entry) => entry.op === op).length;
  }
}

export class FakeSocket implements WebSocketLike {
  onopen: ((event: any) => void) | null = null;
  onmessage: ((event: any) => void) | null = null;
  onclose: ((event: any) => void) | null = null;
  onerror: ((event: any) => void) | null = null;
  closed = false;

  close(): void {
    this.closed = true;
  }

  emit(message: unknown): void {
    this.onmessage?.({ data: JSON.stringify(message) });
  }
}

export function sampleFrame(overrides: Partial<WorldFrame> = {}): WorldFrame {
  const colors = ["red", "green", "blue", "yellow", "orange", "purple"];
  return {
    ts: 1000,
    robot: {
      name: "panda",
      tip_translation: [0, 0, 0.3],
      tip_orientation: [0, 0, 0, 1],
      gripper_on: false,
      latch: "Free",
      held: "",
    },
    bricks: colors.map((color, i) => ({
      name: `brick_${color}`,
      color,
      size_class: i < 3 ? "tall" : "short",
      translation: [i < 3 ? -0.1 : 0.1, -0.12 + (i % 3) * 0.12, 0.05],
      orientation: [0, 0, 0, 1],
    })),
    ...overrides,
  };
}
