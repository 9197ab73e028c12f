import { ApiClient } from "./api.js";
import { CommandHistory } from "./history.js";
import { buildApplyCommand, buildSaveCommand } from "./skillForms.js";
import { Timeline } from "./timeline.js";
import type { Canvas2DLike } from "./workspace.js";
import { renderWorkspace } from "./workspace.js";
import type { CommandError, StreamMessage, WorldFrame } from "./types.js";
import { isWorldFrame } from "./types.js";

export interface WebSocketLike {
  // handler params are deliberately loose: the DOM WebSocket, the `ws`
  // package and test fakes all plug in here
  onopen: ((event: any) => void) | null;
  onmessage: ((event: any) => void) | null;
  onclose: ((event: any) => void) | null;
  onerror: ((event: any) => void) | null;
  close(): void;
}

export interface ConsoleOptions {
  root: HTMLElement;
  api: ApiClient;
  wsUrl: string;
  socketFactory: (url: string) => WebSocketLike;
  contextFor?: (canvas: HTMLCanvasElement) => Canvas2DLike | null;
}

const TEMPLATE = `
<div class="panes">
  <section class="workspace-pane">
    <h2>workspace</h2>
    <canvas id="workspace" width="480" height="480"></canvas>
    <div id="status" class="status"></div>
    <div id="error-banner" class="banner" hidden></div>
  </section>
  <section class="control-pane">
    <h2>timeline</h2>
    <ul id="timeline" class="timeline"></ul>
    <pre id="result" class="result" hidden></pre>
    <pre id="command-error" class="command-error" hidden></pre>
    <form id="command-form">
      <input id="command-input" autocomplete="off" spellcheck="false"
             placeholder="pickup_brick('red', offset=3)" />
      <button id="command-submit" type="submit" disabled>run</button>
    </form>
    <details class="skill-panel" open>
      <summary>skill library</summary>
      <ul id="skill-list"></ul>
      <form id="save-form">
        <input id="save-name" placeholder="skill name" />
        <input id="save-n" type="number" min="1" value="1" />
        <button type="submit">save last n tasks</button>
      </form>
      <form id="apply-form">
        <input id="apply-name" placeholder="skill name" />
        <input id="apply-from" placeholder="from color" />
        <input id="apply-to" placeholder="to color" />
        <button type="submit">apply with substitution</button>
      </form>
    </details>
  </section>
</div>
`;

export class ConsoleApp {
  readonly timeline = new Timeline();
  readonly history = new CommandHistory();
  lastFrame: WorldFrame | null = null;

  private root: HTMLElement;
  private api: ApiClient;
  private wsUrl: string;
  private socketFactory: (url: string) => WebSocketLike;
  private contextFor: (canvas: HTMLCanvasElement) => Canvas2DLike | null;
  private socket: WebSocketLike | null = null;
  private ctx: Canvas2DLike | null = null;
  private canvas!: HTMLCanvasElement;
  private input!: HTMLInputElement;
  private submitButton!: HTMLButtonElement;

  constructor(options: ConsoleOptions) {
    this.root = options.root;
    this.api = options.api;
    this.wsUrl = options.wsUrl;
    this.socketFactory = options.socketFactory;
    this.contextFor =
      options.contextFor ?? ((canvas) => canvas.getContext("2d") as Canvas2DLike | null);
  }

  private element<T extends HTMLElement>(id: string): T {
    return this.root.querySelector(`#${id}`) as T;
  }

  mount(): void {
    this.root.innerHTML = TEMPLATE;
    this.canvas = this.element<HTMLCanvasElement>("workspace");
    this.ctx = this.contextFor(this.canvas);
    this.input = this.element<HTMLInputElement>("command-input");
    this.submitButton = this.element<HTMLButtonElement>("command-submit");

    this.input.addEventListener("input", () => {
      this.submitButton.disabled = this.input.value.trim() === "";
    });
    this.input.addEventListener("keydown", (event) => {
      if (event.key === "ArrowUp") {
        const text = this.history.previous();
        if (text !== undefined) this.setInput(text);
        event.preventDefault();
      } else if (event.key === "ArrowDown") {
        const text = this.history.next();
        if (text !== undefined) this.setInput(text);
        event.preventDefault();
      }
    });
    this.element<HTMLFormElement>("command-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit(this.input.value);
    });
    this.element<HTMLFormElement>("save-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const name = this.element<HTMLInputElement>("save-name").value.trim();
      const n = Number(this.element<HTMLInputElement>("save-n").value);
      if (name && n >= 1) void this.submit(buildSaveCommand(name, n));
    });
    this.element<HTMLFormElement>("apply-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const name = this.element<HTMLInputElement>("apply-name").value.trim();
      const from = this.element<HTMLInputElement>("apply-from").value.trim();
      const to = this.element<HTMLInputElement>("apply-to").value.trim();
      if (name) void this.submit(buildApplyCommand(name, [[from, to]]));
    });
    void this.refreshSkills();
  }

  start(): void {
    this.socket = this.socketFactory(this.wsUrl);
    this.socket.onmessage = (event) => {
      this.handleStream(String(event.data));
    };
  }

  stop(): void {
    this.socket?.close();
    this.socket = null;
  }

  handleStream(raw: string): void {
    let message: StreamMessage;
    try {
      message = JSON.parse(raw) as StreamMessage;
    } catch {
      this.showBanner("unreadable stream message");
      return;
    }
    if (message.type === "world") {
      this.setFrame(message.payload);
    } else if (message.type === "event") {
      this.timeline.add({
        kind: "Tasked",
        ts: message.payload.ts,
        text: message.payload.signature,
      });
      this.renderTimeline();
    } else if (message.type === "outcome") {
      this.timeline.add({
        kind: "Outcome",
        ts: message.payload.ts,
        text: message.payload.detail || `task ${message.payload.task_id}`,
        status: message.payload.status,
      });
      this.renderTimeline();
      void this.refreshSkills();
    }
  }

  setFrame(frame: unknown): void {
    if (!isWorldFrame(frame)) {
      // keep the last good frame on screen
      this.showBanner("malformed world frame received");
      return;
    }
    this.hideBanner();
    this.lastFrame = frame;
    if (this.ctx) {
      renderWorkspace(this.ctx, frame, this.canvas.width, this.canvas.height);
    }
    const held = frame.robot.held ? ` holding ${frame.robot.held}` : "";
    this.element<HTMLElement>("status").textContent =
      `t=${(frame.ts / 1000).toFixed(1)}s latch=${frame.robot.latch}` +
      ` vacuum=${frame.robot.gripper_on ? "on" : "off"}${held}`;
  }

  async submit(text: string): Promise<void> {
    text = text.trim();
    if (!text) return;
    this.hideCommandError();
    let response;
    try {
      response = await this.api.submitCommand(text);
    } catch (error) {
      this.showCommandError(text, {
        message: `request failed: ${String(error)} (retry when the server is back)`,
        kind: "network",
      });
      return;
    }
    if (response.error) {
      this.showCommandError(text, response.error);
      return;
    }
    this.history.push(text);
    this.setInput("");
    if (response.result !== undefined) {
      const result = this.element<HTMLElement>("result");
      result.hidden = false;
      result.textContent = JSON.stringify(response.result, null, 2);
    }
    // Tasked entries arrive via the stream; no optimistic insertion.
  }

  async refreshSkills(): Promise<void> {
    let skills;
    try {
      skills = await this.api.skills();
    } catch {
      return;
    }
    const list = this.element<HTMLElement>("skill-list");
    const doc = list.ownerDocument;
    list.textContent = "";
    for (const skill of skills) {
      const item = doc.createElement("li");
      item.textContent =
        skill.kind === "composite"
          ? `${skill.name} (${skill.steps} steps)`
          : `${skill.name} [${skill.kind}]`;
      list.appendChild(item);
    }
  }

  private renderTimeline(): void {
    this.timeline.render(this.element<HTMLElement>("timeline"));
  }

  private setInput(text: string): void {
    this.input.value = text;
    this.submitButton.disabled = text.trim() === "";
  }

  private showCommandError(text: string, error: CommandError): void {
    const box = this.element<HTMLElement>("command-error");
    box.hidden = false;
    const lines = [text];
    if (error.offset !== undefined) {
      lines.push(" ".repeat(error.offset) + "^");
    }
    lines.push(error.message);
    if (error.suggestions?.length) {
      lines.push(`did you mean: ${error.suggestions.join(", ")}?`);
    }
    box.textContent = lines.join("\n");
  }

  private hideCommandError(): void {
    const box = this.element<HTMLElement>("command-error");
    box.hidden = true;
    box.textContent = "";
  }

  private showBanner(message: string): void {
    const banner = this.element<HTMLElement>("error-banner");
    banner.hidden = false;
    banner.textContent = message;
  }

  private hideBanner(): void {
    this.element<HTMLElement>("error-banner").hidden = true;
  }
}
