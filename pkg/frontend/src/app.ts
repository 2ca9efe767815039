// Browser wiring: a single-page console over the engine's HTTP/SSE API.
// All state shown to the user comes from replayed events and server fetches;
// nothing is mutated client-side.

import { ApiClient, ApiError } from "./api.js";
import { EventLog, followEvents } from "./events.js";
import { badgeClass, buildViewModel, TreeViewModel, TreeViewNode } from "./tree.js";
import { INPUT_CATEGORIES, InputCategory } from "./types.js";

const api = new ApiClient("");

let sessionId: string | null = null;
let eventAbort: AbortController | null = null;
let log = new EventLog();

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function setBusy(busy: boolean): void {
  document.querySelectorAll("button,select,textarea,input").forEach((node) => {
    (node as HTMLButtonElement).disabled = busy;
  });
}

function notice(text: string, isError = false): void {
  const box = el<HTMLDivElement>("notice");
  box.textContent = text;
  box.className = isError ? "notice error" : "notice";
  if (text) setTimeout(() => {
    if (box.textContent === text) box.textContent = "";
  }, 6000);
}

async function guarded<T>(action: () => Promise<T>): Promise<T | undefined> {
  setBusy(true);
  try {
    return await action();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      notice("operation pending: the engine is still working on the previous call", true);
    } else if (err instanceof ApiError) {
      notice(`${err.kind}: ${err.message}`, true);
    } else {
      notice(String(err), true);
    }
    return undefined;
  } finally {
    setBusy(false);
  }
}

function renderNode(node: TreeViewNode): HTMLElement {
  const badge = `<span class="badge ${badgeClass(node.status)}">${node.status}</span>`;
  const attrs = Object.entries(node.attributes)
    .map(([key, value]) => `<span class="attr">[${key}: ${value}]</span>`)
    .join(" ");
  if (node.children.length === 0) {
    const leaf = document.createElement("div");
    leaf.className = "leaf";
    leaf.innerHTML = `${node.name} ${badge} ${attrs}`;
    return leaf;
  }
  const details = document.createElement("details");
  details.open = true;
  const summary = document.createElement("summary");
  summary.innerHTML = `${node.name} ${badge} ${attrs}`;
  details.appendChild(summary);
  for (const child of node.children) {
    details.appendChild(renderNode(child));
  }
  return details;
}

function renderTree(model: TreeViewModel): void {
  el<HTMLSpanElement>("revision").textContent = `revision ${model.revision}`;
  // the text panel is byte-identical to the server payload
  el<HTMLPreElement>("tree-text").textContent = model.text;
  const host = el<HTMLDivElement>("tree-view");
  host.replaceChildren(renderNode(model.root));
}

async function refreshTree(): Promise<void> {
  if (!sessionId) return;
  const response = await api.getTree(sessionId);
  renderTree(buildViewModel(response));
}

function renderPending(kind: string, content: string): void {
  el<HTMLDivElement>("op-kind").textContent = kind;
  el<HTMLPreElement>("op-content").textContent = content;
  el<HTMLButtonElement>("copy-op").style.display =
    kind === "terminal-command" ? "inline-block" : "none";
}

function appendChat(who: string, text: string): void {
  const bubble = document.createElement("div");
  bubble.className = who === "you" ? "bubble you" : "bubble engine";
  bubble.textContent = text;
  el<HTMLDivElement>("chat-log").appendChild(bubble);
  bubble.scrollIntoView();
}

async function connect(id: string): Promise<void> {
  eventAbort?.abort();
  log = new EventLog();
  sessionId = id;
  el<HTMLSpanElement>("session-label").textContent = id;
  el<HTMLDivElement>("picker").style.display = "none";
  el<HTMLDivElement>("console").style.display = "grid";

  eventAbort = new AbortController();
  void followEvents(
    api.eventsUrl(id),
    (apiEvent) => {
      log.add(apiEvent.event);
      const state = log.state();
      if (apiEvent.event.kind === "tree-updated" || apiEvent.event.kind === "manual-revision") {
        void refreshTree();
      }
      if (state.pendingOperation) {
        renderPending(state.pendingOperation.kind, state.pendingOperation.content);
      }
    },
    eventAbort.signal,
  ).catch((err) => {
    if (!eventAbort?.signal.aborted) notice(`event stream closed: ${err}`, true);
  });
  await refreshTree();
}

function wirePicker(): void {
  el<HTMLButtonElement>("create").addEventListener("click", () => {
    void guarded(async () => {
      const goal = el<HTMLInputElement>("goal").value.trim();
      const target = el<HTMLInputElement>("target").value.trim();
      const created = await api.createSession(goal, target);
      await connect(created.id);
    });
  });
  el<HTMLButtonElement>("attach").addEventListener("click", () => {
    void guarded(async () => {
      const id = el<HTMLInputElement>("session-id").value.trim();
      try {
        await api.getTree(id);
      } catch (err) {
        if (err instanceof ApiError && err.status === 404) {
          notice(`no session ${id}`, true);
          return;
        }
        throw err;
      }
      await connect(id);
    });
  });
}

function wireConsole(): void {
  const categorySelect = el<HTMLSelectElement>("category");
  for (const category of INPUT_CATEGORIES) {
    const option = document.createElement("option");
    option.value = category;
    option.textContent = category;
    categorySelect.appendChild(option);
  }

  el<HTMLButtonElement>("next").addEventListener("click", () => {
    void guarded(async () => {
      const operation = await api.requestNext(sessionId!);
      renderPending(operation.kind, operation.content);
    });
  });

  el<HTMLButtonElement>("copy-op").addEventListener("click", () => {
    const content = el<HTMLPreElement>("op-content").textContent ?? "";
    void navigator.clipboard.writeText(content).then(() => notice("command copied"));
  });

  el<HTMLButtonElement>("submit-result").addEventListener("click", () => {
    void guarded(async () => {
      const raw = el<HTMLTextAreaElement>("result-text").value;
      const category = categorySelect.value as InputCategory;
      const { revision } = await api.submitResult(sessionId!, category, raw);
      el<HTMLTextAreaElement>("result-text").value = "";
      notice(`tree updated to revision ${revision}`);
    });
  });

  el<HTMLButtonElement>("ask").addEventListener("click", () => {
    void guarded(async () => {
      const question = el<HTMLInputElement>("question").value.trim();
      if (!question) return;
      appendChat("you", question);
      const { answer } = await api.askFeedback(sessionId!, question);
      appendChat("engine", answer);
      el<HTMLInputElement>("question").value = "";
    });
  });

  el<HTMLButtonElement>("revise").addEventListener("click", () => {
    void guarded(async () => {
      const instruction = el<HTMLTextAreaElement>("instruction").value.trim();
      if (!instruction) return;
      const { revision } = await api.revise(sessionId!, instruction);
      el<HTMLTextAreaElement>("instruction").value = "";
      notice(`manual revision applied, revision ${revision}`);
    });
  });
}

document.addEventListener("DOMContentLoaded", () => {
  wirePicker();
  wireConsole();
});
