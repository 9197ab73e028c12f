import type { CommandResponse, TaskEntry, WorldFrame } from "./types.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async submitCommand(text: string): Promise<CommandResponse> {
    const response = await this.fetchFn(`${this.base}/api/command`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
    if (!response.ok) {
      throw new Error(`command endpoint returned ${response.status}`);
    }
    return (await response.json()) as CommandResponse;
  }

  async world(): Promise<WorldFrame> {
    const response = await this.fetchFn(`${this.base}/api/world`);
    return (await response.json()) as WorldFrame;
  }

  async tasks(n: number): Promise<TaskEntry[]> {
    const response = await this.fetchFn(`${this.base}/api/tasks?n=${n}`);
    return ((await response.json()) as { tasks: TaskEntry[] }).tasks;
  }

  async skills(): Promise<{ name: string; kind: string; steps: number }[]> {
    const response = await this.fetchFn(`${this.base}/api/skills`);
    return ((await response.json()) as { skills: { name: string; kind: string; steps: number }[] })
      .skills;
  }
}
