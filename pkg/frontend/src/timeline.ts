export interface TimelineEntry {
  kind: "Tasked" | "Outcome";
  ts: number;
  text: string;
  status?: string;
}

// Append-only log ordered by timestamp; stream messages may arrive out of
// order, so each insert finds its slot instead of trusting arrival order.
export class Timeline {
  readonly entries: TimelineEntry[] = [];

  add(entry: TimelineEntry): void {
    let index = this.entries.length;
    while (index > 0 && this.entries[index - 1].ts > entry.ts) {
      index -= 1;
    }
    this.entries.splice(index, 0, entry);
  }

  render(listElement: HTMLElement): void {
    const doc = listElement.ownerDocument;
    listElement.textContent = "";
    for (const entry of this.entries) {
      const item = doc.createElement("li");
      item.className = `timeline-${entry.kind.toLowerCase()}`;
      const stamp = (entry.ts / 1000).toFixed(2);
      item.textContent =
        entry.kind === "Tasked"
          ? `[${stamp}s] > ${entry.text}`
          : `[${stamp}s] ${entry.status}: ${entry.text}`;
      listElement.appendChild(item);
    }
  }
}
