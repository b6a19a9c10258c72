/** Console entry point. Role, actor id, and token come from the URL;
 * everything else (labels, rubric) is fetched from the capture server. */

import { CaptureClient, ConsoleConfig, Role } from "./api.js";
import { EventBatcher } from "./batcher.js";
import { EvaluatorForm } from "./evaluator.js";
import { ObserverView } from "./observer.js";

// labels that toggle start/end rather than firing instants
const INTERVAL_LABELS = new Set(["reading_notes", "nervous_movement"]);

function configFromLocation(loc: Location): ConsoleConfig {
  const params = new URLSearchParams(loc.search);
  const role = (params.get("role") ?? "observer") as Role;
  return {
    role,
    actorId: params.get("actor") ?? "anonymous",
    baseUrl: loc.origin,
    token: params.get("token") ?? undefined,
  };
}

export async function boot(doc: Document, loc: Location): Promise<void> {
  const config = configFromLocation(loc);
  const mount = doc.getElementById("app") ?? doc.body;

  let observer: ObserverView | null = null;
  const client = new CaptureClient(config, {
    onRejected: (_job, _status, detail) => observer?.showError(detail),
    onOffline: (pending) => observer?.showOffline(pending),
    onDrained: () => observer?.showDrained(),
  });

  try {
    const session = await client.fetchSession();
    if (config.role === "observer") {
      observer = new ObserverView(client, session.annotation_labels,
                                  INTERVAL_LABELS, doc);
      mount.appendChild(observer.root);
    } else {
      const rubric = await client.fetchRubric();
      const entry = session.evaluators.find((e) => e.id === config.actorId);
      const role = entry?.role ?? "peer";
      const batcher = new EventBatcher(client, config.actorId);
      batcher.start();
      const form = new EvaluatorForm(client, rubric, batcher, role, doc);
      mount.appendChild(form.root);
    }
  } catch (err) {
    const msg = doc.createElement("div");
    msg.className = "banner error";
    msg.textContent = `session not available: ${String(err)}`;
    mount.appendChild(msg);
  }
}

declare const window: (Window & typeof globalThis) | undefined;

if (typeof window !== "undefined" && typeof document !== "undefined") {
  void boot(document, window.location);
}
