// Per-session command history with shell-style up/down navigation.
export class CommandHistory {
  private items: string[] = [];
  private cursor = -1;

  push(text: string): void {
    if (text && this.items[this.items.length - 1] !== text) {
      this.items.push(text);
    }
    this.cursor = this.items.length;
  }

  previous(): string | undefined {
    if (this.items.length === 0) return undefined;
    this.cursor = Math.max(0, this.cursor - 1);
    return this.items[this.cursor];
  }

  next(): string | undefined {
    if (this.items.length === 0) return undefined;
    this.cursor = Math.min(this.items.length, this.cursor + 1);
    return this.cursor === this.items.length ? "" : this.items[this.cursor];
  }

  get size(): number {
    return this.items.length;
  }
}
