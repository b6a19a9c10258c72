import { describe, expect, it } from "vitest";

import { gestureKey, QueueJob, SendQueue } from "../src/queue.js";

function jsonResponse(status: number, body: unknown = {}): Response {
  return new Response(JSON.stringify(body), { status });
}

describe("SendQueue", () => {
  it("drains jobs strictly in enqueue order", async () => {
    const seen: string[] = [];
    const queue = new SendQueue("http://x", {}, async (_url, init) => {
      const body = JSON.parse(String(init.body)) as { n: string };
      seen.push(body.n);
      return jsonResponse(201);
    });
    for (const n of ["a", "b", "c", "d"]) {
      queue.enqueue({ key: gestureKey("t"), path: "/p", body: { n } });
    }
    await queue.settled();
    expect(seen).toEqual(["a", "b", "c", "d"]);
  });

  it("retries through an outage and flushes in order afterwards", async () => {
    let online = false;
    const delivered: string[] = [];
    const queue = new SendQueue(
      "http://x",
      {},
      async (_url, init) => {
        if (!online) throw new TypeError("fetch failed");
        delivered.push((JSON.parse(String(init.body)) as { n: string }).n);
        return jsonResponse(201);
      },
      200,  // max retry delay, keeps the test quick
      50,
    );
    for (const n of ["first", "second", "third"]) {
      queue.enqueue({ key: gestureKey("t"), path: "/p", body: { n } });
    }
    await new Promise((r) => setTimeout(r, 400)); // outage window
    expect(delivered).toEqual([]);
    expect(queue.pending).toBe(3);
    online = true;
    await queue.settled();
    expect(delivered).toEqual(["first", "second", "third"]);
  });

  it("keeps the same idempotency key across retries", async () => {
    let failures = 3;
    const keys: string[] = [];
    const queue = new SendQueue(
      "http://x",
      {},
      async (_url, init) => {
        const body = JSON.parse(String(init.body)) as { key: string };
        keys.push(body.key);
        if (failures > 0) {
          failures -= 1;
          throw new TypeError("fetch failed");
        }
        return jsonResponse(201);
      },
      100,
      20,
    );
    const key = gestureKey("t");
    queue.enqueue({ key, path: "/p", body: { key } });
    await queue.settled();
    expect(keys.length).toBe(4);
    expect(new Set(keys).size).toBe(1);
    expect(keys[0]).toBe(key);
  });

  it("drops 4xx-rejected jobs and reports them without blocking the rest", async () => {
    const rejected: Array<{ job: QueueJob; status: number }> = [];
    const delivered: string[] = [];
    const queue = new SendQueue(
      "http://x",
      { onRejected: (job, status) => rejected.push({ job, status }) },
      async (_url, init) => {
        const body = JSON.parse(String(init.body)) as { n: string };
        if (body.n === "bad") return jsonResponse(422, { error: "nope" });
        delivered.push(body.n);
        return jsonResponse(201);
      },
    );
    for (const n of ["ok1", "bad", "ok2"]) {
      queue.enqueue({ key: gestureKey("t"), path: "/p", body: { n } });
    }
    await queue.settled();
    expect(delivered).toEqual(["ok1", "ok2"]);
    expect(rejected.length).toBe(1);
    expect(rejected[0].status).toBe(422);
  });

  it("reports offline state with the pending count", async () => {
    let online = false;
    const offlineCounts: number[] = [];
    const queue = new SendQueue(
      "http://x",
      { onOffline: (pending) => offlineCounts.push(pending) },
      async () => {
        if (!online) throw new TypeError("fetch failed");
        return jsonResponse(201);
      },
      100,
      20,
    );
    queue.enqueue({ key: gestureKey("t"), path: "/p", body: {} });
    await new Promise((r) => setTimeout(r, 80));
    online = true;
    await queue.settled();
    expect(offlineCounts.length).toBeGreaterThan(0);
    expect(offlineCounts[0]).toBe(1);
  });
});
