/** Observer view: one button per configured label. Instant labels send on
 * tap; interval labels toggle start/end with a visible active state. Failed
 * sends stay queued and flush in order when the server comes back. */

import { CaptureClient } from "./api.js";

export class ObserverView {
  private active = new Set<string>();  // interval labels currently open
  readonly root: HTMLElement;
  private banner: HTMLElement;

  constructor(
    private client: CaptureClient,
    labels: string[],
    private intervalLabels: Set<string>,
    doc: Document = document,
  ) {
    this.root = doc.createElement("div");
    this.root.className = "observer";
    this.banner = doc.createElement("div");
    this.banner.className = "banner hidden";
    this.root.appendChild(this.banner);

    const grid = doc.createElement("div");
    grid.className = "label-grid";
    for (const label of labels) {
      const button = doc.createElement("button");
      button.textContent = label.replace(/_/g, " ");
      button.dataset.label = label;
      button.addEventListener("click", () => this.tap(label, button));
      grid.appendChild(button);
    }
    this.root.appendChild(grid);
  }

  /** One gesture, one annotation record. */
  tap(label: string, button?: HTMLButtonElement): void {
    if (this.intervalLabels.has(label)) {
      if (this.active.has(label)) {
        this.active.delete(label);
        button?.classList.remove("active");
        this.client.postAnnotation(label, "end");
      } else {
        this.active.add(label);
        button?.classList.add("active");
        this.client.postAnnotation(label, "start");
      }
    } else {
      this.client.postAnnotation(label, "instant");
    }
  }

  isActive(label: string): boolean {
    return this.active.has(label);
  }

  showError(detail: string): void {
    this.banner.textContent = `rejected: ${detail}`;
    this.banner.className = "banner error";
  }

  showOffline(pending: number): void {
    this.banner.textContent = `offline: ${pending} queued, retrying`;
    this.banner.className = "banner offline";
  }

  showDrained(): void {
    this.banner.textContent = "";
    this.banner.className = "banner hidden";
  }
}
