/** Evaluator view: the rubric as a form. Emits item_focus/item_blur when
 * the user enters/leaves an item, item_rated on Likert selection, keypress
 * events carrying key categories only (never text content), and
 * comment_edit with the current comment length. Submission requires every
 * item scored and blocks until the server stores the document. */

import { CaptureClient, Rubric } from "./api.js";
import { categorize, EventBatcher } from "./batcher.js";

export class EvaluatorForm {
  readonly root: HTMLElement;
  private scores = new Map<string, number>();
  private comments = new Map<string, string>();
  private focusedItem: string | null = null;
  private status: HTMLElement;
  private itemErrors = new Map<string, HTMLElement>();
  submitted = false;

  constructor(
    private client: CaptureClient,
    private rubric: Rubric,
    private batcher: EventBatcher,
    private role: string,
    doc: Document = document,
  ) {
    this.root = doc.createElement("form");
    this.root.className = "evaluator";
    this.root.addEventListener("submit", (e) => e.preventDefault());

    for (const item of rubric.items) {
      const section = doc.createElement("fieldset");
      section.dataset.item = item.id;

      const legend = doc.createElement("legend");
      legend.textContent = item.title;
      section.appendChild(legend);

      const scale = doc.createElement("div");
      scale.className = "likert";
      for (let level = 1; level <= 5; level += 1) {
        const radio = doc.createElement("input");
        radio.type = "radio";
        radio.name = `score-${item.id}`;
        radio.value = String(level);
        radio.title = item.levels[level - 1] ?? String(level);
        radio.addEventListener("change", () => this.rate(item.id, level));
        scale.appendChild(radio);
      }
      section.appendChild(scale);

      const comment = doc.createElement("textarea");
      comment.name = `comment-${item.id}`;
      comment.placeholder = "qualitative observation";
      comment.addEventListener("keydown", (e) =>
        this.keypress(item.id, (e as KeyboardEvent).key));
      comment.addEventListener("input", () =>
        this.editComment(item.id, comment.value));
      section.appendChild(comment);

      const error = doc.createElement("div");
      error.className = "item-error hidden";
      section.appendChild(error);
      this.itemErrors.set(item.id, error);

      section.addEventListener("focusin", () => this.enterItem(item.id));
      section.addEventListener("focusout", (e) => {
        const fe = e as FocusEvent;
        const next = fe.relatedTarget as Node | null;
        if (!next || !section.contains(next)) this.leaveItem(item.id);
      });
      this.root.appendChild(section);
    }

    const submit = doc.createElement("button");
    submit.textContent = "Submit evaluation";
    submit.addEventListener("click", () => void this.submit());
    this.root.appendChild(submit);

    this.status = doc.createElement("div");
    this.status.className = "status";
    this.root.appendChild(this.status);
  }

  enterItem(itemId: string): void {
    if (this.focusedItem === itemId) return;
    if (this.focusedItem !== null) {
      this.batcher.record("item_blur", this.focusedItem);
    }
    this.focusedItem = itemId;
    this.batcher.record("item_focus", itemId);
  }

  leaveItem(itemId: string): void {
    if (this.focusedItem !== itemId) return;
    this.focusedItem = null;
    this.batcher.record("item_blur", itemId);
  }

  rate(itemId: string, level: number): void {
    this.scores.set(itemId, level);
    this.itemErrors.get(itemId)?.classList.add("hidden");
    this.batcher.record("item_rated", itemId, level);
  }

  /** Only the key category leaves the client; final comment text travels
   * solely inside the evaluation document. */
  keypress(itemId: string, key: string): void {
    this.batcher.record("keypress", itemId, categorize(key));
  }

  editComment(itemId: string, text: string): void {
    this.comments.set(itemId, text);
    this.batcher.record("comment_edit", itemId, text.length);
  }

  missingItems(): string[] {
    return this.rubric.items
      .map((item) => item.id)
      .filter((id) => !this.scores.has(id));
  }

  async submit(): Promise<boolean> {
    const missing = this.missingItems();
    if (missing.length > 0) {
      for (const id of missing) {
        const el = this.itemErrors.get(id);
        if (el) {
          el.textContent = "score required";
          el.classList.remove("hidden");
        }
      }
      this.status.textContent = `missing scores: ${missing.join(", ")}`;
      return false;
    }
    this.batcher.stop();  // flush any buffered events before the document
    try {
      await this.client.queue.settled();
      const scores: Record<string, number> = {};
      for (const [k, v] of this.scores) scores[k] = v;
      const comments: Record<string, string> = {};
      for (const item of this.rubric.items) {
        comments[item.id] = this.comments.get(item.id) ?? "";
      }
      const version = await this.client.postEvaluation(this.role, scores, comments);
      this.submitted = true;
      this.status.textContent = `submitted (version ${version})`;
      return true;
    } catch (err) {
      this.status.textContent = `submit failed, try again: ${String(err)}`;
      this.batcher.start();
      return false;
    }
  }
}
