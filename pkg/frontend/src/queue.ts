/** Ordered send queue with retry.
 *
 * Jobs drain strictly in enqueue order; a network failure pauses the queue
 * and retries the same job (same body, same idempotency key) with backoff
 * until the server is reachable again, so nothing is reordered or dropped
 * by an outage. A definitive server rejection (4xx) drops the job and
 * surfaces the error instead of blocking everything behind it.
 */

export interface QueueJob {
  key: string;          // idempotency key, stable across retries
  path: string;
  body: unknown;
}

export interface QueueEvents {
  onRejected?: (job: QueueJob, status: number, detail: string) => void;
  onOffline?: (pending: number) => void;
  onDrained?: () => void;
}

export type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

let keyCounter = 0;

export function gestureKey(prefix: string): string {
  keyCounter += 1;
  return `${prefix}-${Date.now().toString(36)}-${keyCounter}`;
}

export class SendQueue {
  private jobs: QueueJob[] = [];
  private draining = false;
  private retryDelayMs: number;

  constructor(
    private baseUrl: string,
    private events: QueueEvents = {},
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private maxRetryDelayMs = 5_000,
    private initialRetryDelayMs = 400,
  ) {
    this.retryDelayMs = initialRetryDelayMs;
  }

  get pending(): number {
    return this.jobs.length;
  }

  enqueue(job: QueueJob): void {
    this.jobs.push(job);
    void this.drain();
  }

  /** Resolves when the queue is empty (used by tests and submit flows). */
  async settled(timeoutMs = 30_000): Promise<void> {
    const start = Date.now();
    while (this.jobs.length > 0 || this.draining) {
      if (Date.now() - start > timeoutMs) {
        throw new Error(`queue not settled after ${timeoutMs}ms`);
      }
      await sleep(25);
    }
  }

  private async drain(): Promise<void> {
    if (this.draining) return;
    this.draining = true;
    try {
      while (this.jobs.length > 0) {
        const job = this.jobs[0];
        let response: Response;
        try {
          response = await this.fetchImpl(`${this.baseUrl}${job.path}`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(job.body),
          });
        } catch {
          this.events.onOffline?.(this.jobs.length);
          await sleep(this.retryDelayMs);
          this.retryDelayMs = Math.min(this.retryDelayMs * 2, this.maxRetryDelayMs);
          continue; // same job, same key
        }
        this.retryDelayMs = this.initialRetryDelayMs;
        if (response.status >= 400 && response.status < 500) {
          let detail = "";
          try {
            detail = JSON.stringify(await response.json());
          } catch {
            detail = `HTTP ${response.status}`;
          }
          this.jobs.shift();
          this.events.onRejected?.(job, response.status, detail);
          continue;
        }
        if (response.status >= 500) {
          await sleep(this.retryDelayMs);
          this.retryDelayMs = Math.min(this.retryDelayMs * 2, this.maxRetryDelayMs);
          continue;
        }
        this.jobs.shift();
      }
      this.events.onDrained?.();
    } finally {
      this.draining = false;
    }
    if (this.jobs.length > 0) void this.drain();
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
