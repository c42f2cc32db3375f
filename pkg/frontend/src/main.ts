// Browser bootstrap: session picker, then the app shell for one session.

import { ApiClient } from "./api.js";
import { App } from "./app.js";
import { button, clear, el } from "./dom.js";

const mount = document.getElementById("app");
if (mount) {
  void boot(mount);
}

async function boot(root: HTMLElement): Promise<void> {
  const api = new ApiClient(window.location.origin);
  const fromHash = window.location.hash.match(/^#\/s\/([0-9a-f]{32})$/);
  if (fromHash) {
    const app = new App(root, api);
    await app.openSession(fromHash[1]);
    return;
  }
  await renderPicker(root, api);
}

async function renderPicker(root: HTMLElement, api: ApiClient): Promise<void> {
  clear(root);
  const taskInput = el("input", {
    class: "task-input",
    placeholder: "describe the design task",
  }) as HTMLInputElement;
  const start = button("start session", async () => {
    const task = taskInput.value.trim();
    if (!task) {
      return;
    }
    const created = await api.createSession(task);
    open(created.session_id);
  });
  const list = el("ul", { class: "session-list" });
  const sessions = await api.listSessions();
  for (const info of sessions.sessions) {
    const item = button(info.task, () => open(info.session_id), {
      class: "session-link",
    });
    list.append(el("li", {}, item));
  }
  root.append(
    el(
      "div",
      { class: "picker" },
      el("h1", {}, "FlexMind"),
      el("div", { class: "new-session" }, taskInput, start),
      el("h2", {}, "recent sessions"),
      list,
    ),
  );

  function open(sessionId: string): void {
    window.location.hash = `#/s/${sessionId}`;
    const app = new App(root, api);
    void app.openSession(sessionId);
  }
}
