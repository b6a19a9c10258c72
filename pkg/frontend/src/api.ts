/** Typed client for the capture service HTTP API. The label set and rubric
 * always come from the server; nothing is hard-coded in the console. */

import { gestureKey, QueueEvents, SendQueue } from "./queue.js";
import { nowMs } from "./clock.js";

export type Role = "observer" | "evaluator";

export interface ConsoleConfig {
  role: Role;
  actorId: string;
  baseUrl: string;
  token?: string;
}

export interface RubricItem {
  id: string;
  title: string;
  levels: string[];
  phase?: string;
}

export interface Rubric {
  version: string;
  items: RubricItem[];
}

export interface SessionInfo {
  id: string;
  annotation_labels: string[];
  evaluators: { id: string; role: string }[];
}

export interface ConsoleEvent {
  client_ts_ms: number;
  actor_id: string;
  kind: string;
  item_id?: string;
  value?: string | number;
  key?: string;
}

function withToken(url: string, token?: string): string {
  if (!token) return url;
  return url + (url.includes("?") ? "&" : "?") + "token=" + encodeURIComponent(token);
}

export class CaptureClient {
  readonly queue: SendQueue;
  private tokenQuery: string;

  constructor(
    private config: ConsoleConfig,
    events: QueueEvents = {},
    fetchImpl?: (url: string, init: RequestInit) => Promise<Response>,
  ) {
    this.tokenQuery = config.token ? `?token=${encodeURIComponent(config.token)}` : "";
    this.queue = new SendQueue(config.baseUrl, events, fetchImpl);
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(withToken(`${this.config.baseUrl}${path}`, this.config.token));
    if (!resp.ok) {
      throw new Error(`GET ${path} failed: ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  fetchSession(): Promise<SessionInfo> {
    return this.getJson<SessionInfo>("/api/v1/session");
  }

  fetchRubric(): Promise<Rubric> {
    return this.getJson<Rubric>("/api/v1/rubric");
  }

  /** One queued annotation per gesture; retries keep the same key. */
  postAnnotation(label: string, kind: "instant" | "start" | "end"): string {
    const key = gestureKey("ann");
    this.queue.enqueue({
      key,
      path: `/api/v1/annotations${this.tokenQuery}`,
      body: { label, kind, client_ts_ms: nowMs(), key },
    });
    return key;
  }

  postEventBatch(events: ConsoleEvent[]): void {
    if (events.length === 0) return;
    this.queue.enqueue({
      key: gestureKey("batch"),
      path: `/api/v1/events${this.tokenQuery}`,
      body: events,
    });
  }

  /** Submission blocks until the server accepts (201). The role comes from
   * the server's session document, never from local guesswork. */
  async postEvaluation(role: string, scores: Record<string, number>,
                       comments: Record<string, string>): Promise<number> {
    const resp = await fetch(withToken(`${this.config.baseUrl}/api/v1/evaluations`,
                                       this.config.token), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        evaluator_id: this.config.actorId,
        role,
        scores,
        comments,
      }),
    });
    if (resp.status !== 201) {
      const detail = await resp.text();
      throw new Error(`evaluation rejected (${resp.status}): ${detail}`);
    }
    const doc = (await resp.json()) as { version: number };
    return doc.version;
  }
}
