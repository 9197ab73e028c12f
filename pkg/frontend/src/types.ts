// Wire types, mirroring the server's /api payloads exactly. The console
// never derives world state itself; it renders what the server sent.

export interface RobotState {
  name: string;
  tip_translation: number[];
  tip_orientation: number[];
  gripper_on: boolean;
  latch: string;
  held: string;
}

export interface BrickState {
  name: string;
  color: string;
  size_class: string;
  translation: number[];
  orientation: number[];
}

export interface WorldFrame {
  ts: number;
  robot: RobotState;
  bricks: BrickState[];
}

export interface CommandError {
  message: string;
  kind: string;
  offset?: number;
  expected?: string[];
  suggestions?: string[];
}

export interface CommandResponse {
  event_id?: number;
  result?: unknown;
  error?: CommandError;
}

export interface TaskEntry {
  event_id: number;
  ts: number;
  signature: string;
  outcome?: string;
  detail?: string;
}

export interface OutcomePayload {
  task_id: number;
  status: string;
  detail: string;
  ts: number;
}

export interface EventPayload {
  event_id: number;
  signature: string;
  ts: number;
}

export type StreamMessage =
  | { type: "world"; payload: WorldFrame }
  | { type: "outcome"; payload: OutcomePayload }
  | { type: "event"; payload: EventPayload };

export function isWorldFrame(value: unknown): value is WorldFrame {
  const frame = value as WorldFrame;
  return (
    !!frame &&
    typeof frame.ts === "number" &&
    !!frame.robot &&
    Array.isArray(frame.robot.tip_translation) &&
    Array.isArray(frame.bricks)
  );
}
