import { describe, expect, it } from "vitest";

import { CaptureClient, ConsoleEvent, Rubric } from "../src/api.js";
import { EventBatcher } from "../src/batcher.js";
import { EvaluatorForm } from "../src/evaluator.js";

const CONFIG = { role: "evaluator" as const, actorId: "peer1", baseUrl: "http://x" };

const RUBRIC: Rubric = {
  version: "1",
  items: [
    { id: "eye_contact", title: "Eye contact", levels: ["1", "2", "3", "4", "5"] },
    { id: "conclusions", title: "Conclusions", levels: ["1", "2", "3", "4", "5"] },
  ],
};

function setup() {
  const batches: ConsoleEvent[][] = [];
  const evaluations: unknown[] = [];
  const client = new CaptureClient(CONFIG, {}, async () =>
    new Response("{}", { status: 202 }));
  client.postEventBatch = (events) => {
    batches.push(events);
  };
  client.postEvaluation = async (role, scores, comments) => {
    evaluations.push({ role, scores, comments });
    return 1;
  };
  const batcher = new EventBatcher(client, "peer1", 10_000);
  const form = new EvaluatorForm(client, RUBRIC, batcher, "peer", document);
  return { form, batcher, batches, evaluations };
}

function allEvents(batches: ConsoleEvent[][]): ConsoleEvent[] {
  return batches.flat();
}

describe("EvaluatorForm", () => {
  it("renders a five-point scale per rubric item", () => {
    const { form } = setup();
    const radios = form.root.querySelectorAll('input[type="radio"]');
    expect(radios.length).toBe(10);
  });

  it("selecting a score emits one item_rated event with the value", () => {
    const { form, batcher, batches } = setup();
    form.rate("eye_contact", 4);
    batcher.flush();
    const rated = allEvents(batches).filter((e) => e.kind === "item_rated");
    expect(rated).toHaveLength(1);
    expect(rated[0]).toMatchObject({ item_id: "eye_contact", value: 4 });
  });

  it("focus transitions emit item_focus and item_blur", () => {
    const { form, batcher, batches } = setup();
    form.enterItem("eye_contact");
    form.enterItem("conclusions");  // implies blur of the previous item
    form.leaveItem("conclusions");
    batcher.flush();
    const kinds = allEvents(batches).map((e) => `${e.kind}:${e.item_id}`);
    expect(kinds).toEqual([
      "item_focus:eye_contact",
      "item_blur:eye_contact",
      "item_focus:conclusions",
      "item_blur:conclusions",
    ]);
  });

  it("typing emits key categories and comment text stays out of events", () => {
    const { form, batcher, batches } = setup();
    const text = "needs more direct gaze";
    for (const ch of text) form.keypress("eye_contact", ch);
    form.editComment("eye_contact", text);
    batcher.flush();
    const events = allEvents(batches);
    const keypresses = events.filter((e) => e.kind === "keypress");
    expect(keypresses.length).toBeGreaterThanOrEqual(text.length);
    for (const e of events) {
      if (typeof e.value === "string") {
        expect(["letter", "digit", "backspace", "navigation", "other"])
          .toContain(e.value);
      }
    }
    const edits = events.filter((e) => e.kind === "comment_edit");
    expect(edits[0].value).toBe(text.length);
  });

  it("blocks submission while any item is unscored", async () => {
    const { form, evaluations } = setup();
    form.rate("eye_contact", 4);
    const ok = await form.submit();
    expect(ok).toBe(false);
    expect(evaluations).toHaveLength(0);
    const error = form.root.querySelector(
      'fieldset[data-item="conclusions"] .item-error')!;
    expect(error.classList.contains("hidden")).toBe(false);
  });

  it("submits the complete evaluation with final comment text", async () => {
    const { form, evaluations } = setup();
    form.rate("eye_contact", 4);
    form.rate("conclusions", 3);
    form.editComment("eye_contact", "steady in the middle");
    const ok = await form.submit();
    expect(ok).toBe(true);
    expect(evaluations).toHaveLength(1);
    expect(evaluations[0]).toEqual({
      role: "peer",
      scores: { eye_contact: 4, conclusions: 3 },
      comments: { eye_contact: "steady in the middle", conclusions: "" },
    });
    expect(form.submitted).toBe(true);
  });
});
