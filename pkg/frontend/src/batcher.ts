/** Buffers interaction events and ships them as ordered batches every
 * flush interval (2 s in production; tests shrink it). */

import { CaptureClient, ConsoleEvent } from "./api.js";
import { nowMs } from "./clock.js";
import { gestureKey } from "./queue.js";

export type KeyCategory = "letter" | "digit" | "backspace" | "navigation" | "other";

const NAVIGATION_KEYS = new Set([
  "ArrowLeft", "ArrowRight", "ArrowUp", "ArrowDown",
  "Home", "End", "PageUp", "PageDown", "Tab", "Enter",
]);

/** Key category only: the audit needs typing dynamics, never content. */
export function categorize(key: string): KeyCategory {
  if (key.length === 1) {
    if (key >= "0" && key <= "9") return "digit";
    return "letter";
  }
  if (key === "Backspace" || key === "Delete") return "backspace";
  if (NAVIGATION_KEYS.has(key)) return "navigation";
  return "other";
}

export class EventBatcher {
  private buffer: ConsoleEvent[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private client: CaptureClient,
    private actorId: string,
    private flushIntervalMs = 2_000,
  ) {}

  start(): void {
    if (this.timer === null) {
      this.timer = setInterval(() => this.flush(), this.flushIntervalMs);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.flush();
  }

  record(kind: string, itemId?: string, value?: string | number): void {
    this.buffer.push({
      client_ts_ms: nowMs(),
      actor_id: this.actorId,
      kind,
      ...(itemId !== undefined ? { item_id: itemId } : {}),
      ...(value !== undefined ? { value } : {}),
      key: gestureKey("ev"),
    });
  }

  flush(): void {
    if (this.buffer.length === 0) return;
    const batch = this.buffer;
    this.buffer = [];
    this.client.postEventBatch(batch);
  }

  get buffered(): number {
    return this.buffer.length;
  }
}
