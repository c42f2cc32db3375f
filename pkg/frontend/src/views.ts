// View renderers: pure functions from state + handlers to DOM subtrees.
// Every card or chip that represents a graph node carries data-node-id.

import { button, el } from "./dom.js";
import type { SessionState } from "./state.js";
import { attachTooltip } from "./tooltip.js";
import type { CollectionEntry, NodeWire } from "./types.js";

export type View =
  | { kind: "overview" }
  | { kind: "canvas"; focus: string }
  | { kind: "explored" };

export interface Handlers {
  navigate(view: View): void;
  initialize(): void;
  findSimilar(focus: string): void;
  diagnoseRisks(focus: string): void;
  mitigate(risk: string): void;
  ask(focus: string, question: string): void;
  togglePin(node: string): void;
  addOwn(parent: string, kind: "Idea" | "Mitigation", name: string, description: string): void;
}

export interface UiFlags {
  pending: boolean;
  connected: boolean;
  error: { message: string; retry: () => void } | null;
}

function provenanceBadge(node: NodeWire): HTMLElement {
  const cls = node.provenance === "User" ? "badge user" : "badge system";
  const label = node.provenance === "User" ? "yours" : "AI";
  return el("span", { class: cls }, label);
}

function ideaChip(node: NodeWire, handlers: Handlers, state: SessionState): HTMLElement {
  const chip = el(
    "span",
    {
      class: `chip idea${node.provenance === "User" ? " user" : ""}`,
      "data-node-id": node.id,
    },
    (state.isPinned(node.id) ? "★ " : "") + node.name,
  );
  attachTooltip(chip, node.name, node.description);
  chip.addEventListener("click", () =>
    handlers.navigate({ kind: "canvas", focus: node.id }),
  );
  return chip;
}

function addOwnForm(
  parent: NodeWire,
  kind: "Idea" | "Mitigation",
  handlers: Handlers,
  disabled: boolean,
): HTMLElement {
  const name = el("input", {
    class: "own-name",
    placeholder: `your ${kind.toLowerCase()} name`,
  }) as HTMLInputElement;
  const description = el("input", {
    class: "own-description",
    placeholder: "why it works",
  }) as HTMLInputElement;
  const submit = button(
    "add your own",
    () => {
      if (name.value.trim() && description.value.trim()) {
        handlers.addOwn(parent.id, kind, name.value, description.value);
      }
    },
    { class: "add-own" },
  );
  submit.disabled = disabled;
  return el("div", { class: "add-own-form", "data-parent-id": parent.id }, name, description, submit);
}

function errorCard(flags: UiFlags): HTMLElement | null {
  if (!flags.error) {
    return null;
  }
  const retry = button("retry", flags.error.retry, { class: "retry" });
  return el(
    "div",
    { class: "error-card", role: "alert" },
    el("span", {}, flags.error.message),
    retry,
  );
}

// --- overview ---------------------------------------------------------------

export function renderOverview(
  state: SessionState,
  handlers: Handlers,
  flags: UiFlags,
): HTMLElement {
  const root = state.root();
  const container = el("section", { class: "overview" });
  if (!root) {
    return container;
  }
  container.append(el("h1", {}, root.name));
  const error = errorCard(flags);
  if (error) {
    container.append(error);
  }
  const categories = state.categories();
  if (categories.length === 0) {
    const generate = button("generate ideas", handlers.initialize, {
      class: "initialize",
    });
    generate.disabled = flags.pending || !flags.connected;
    container.append(
      el(
        "div",
        { class: "empty-state" },
        el("p", {}, "No design space yet. Generate diverse idea categories to start."),
        generate,
      ),
    );
    return container;
  }
  const grid = el("div", { class: "category-grid" });
  for (const category of categories) {
    const title = el("h2", { "data-node-id": category.id }, category.name);
    attachTooltip(title, category.name, category.description);
    const chips = el("div", { class: "chips" });
    for (const idea of state.childrenOf(category.id, "Contains")) {
      chips.append(ideaChip(idea, handlers, state));
    }
    const card = el(
      "div",
      { class: "category-card", "data-node-id": category.id },
      title,
      chips,
      addOwnForm(category, "Idea", handlers, flags.pending),
    );
    grid.append(card);
  }
  container.append(grid);
  return container;
}

// --- canvas -----------------------------------------------------------------

export function renderCanvas(
  state: SessionState,
  focusId: string,
  handlers: Handlers,
  flags: UiFlags,
): HTMLElement {
  const container = el("section", { class: "canvas" });
  const focus = state.node(focusId);
  if (!focus) {
    container.append(el("p", { class: "missing" }, "This node is gone from the snapshot."));
    return container;
  }

  const similar = button("similar", () => handlers.findSimilar(focus.id), {
    class: "op-similar",
  });
  const risk = button("risk", () => handlers.diagnoseRisks(focus.id), {
    class: "op-risk",
  });
  const collect = button(
    state.isPinned(focus.id) ? "★ collected" : "☆ collect",
    () => handlers.togglePin(focus.id),
    { class: "op-collect" },
  );
  const questionInput = el("input", {
    class: "question-input",
    placeholder: "ask about this idea",
  }) as HTMLInputElement;
  const askButton = button(
    "ask",
    () => {
      if (questionInput.value.trim()) {
        handlers.ask(focus.id, questionInput.value);
        questionInput.value = "";
      }
    },
    { class: "op-question" },
  );
  for (const control of [similar, risk, askButton]) {
    control.disabled = flags.pending || !flags.connected;
  }
  collect.disabled = flags.pending;

  const focusCard = el(
    "div",
    { class: "focus-card", "data-node-id": focus.id },
    el("h1", {}, focus.name),
    provenanceBadge(focus),
    el("p", {}, focus.description),
    el("div", { class: "op-buttons" }, similar, risk, collect, questionInput, askButton),
  );
  container.append(focusCard);
  if (flags.pending) {
    container.append(el("p", { class: "pending" }, "working..."));
  }
  const error = errorCard(flags);
  if (error) {
    container.append(error);
  }

  const attributes = state.childrenOf(focus.id, "Abstracts");
  if (attributes.length > 0) {
    const strip = el("div", { class: "attribute-strip" });
    for (const attribute of attributes) {
      const chip = el(
        "span",
        { class: "chip attribute", "data-node-id": attribute.id },
        attribute.name,
      );
      attachTooltip(chip, attribute.name, attribute.description);
      strip.append(chip);
      for (const category of state.childrenOf(attribute.id, "Inspires")) {
        strip.append(renderCategoryCluster(category, state, handlers, flags));
      }
    }
    container.append(el("h2", {}, "essential attributes"), strip);
  }

  const risks = state.childrenOf(focus.id, "FlagsRisk");
  if (risks.length > 0) {
    const list = el("div", { class: "risk-list" });
    for (const riskNode of risks) {
      list.append(renderRiskCard(riskNode, state, handlers, flags));
    }
    container.append(el("h2", {}, "risks"), list);
  }

  const questions = state.childrenOf(focus.id, "Asks");
  if (questions.length > 0) {
    const thread = el("div", { class: "question-thread" });
    for (const question of questions) {
      const card = el(
        "div",
        { class: "question-card", "data-node-id": question.id },
        el("p", { class: "question-text" }, question.name),
        provenanceBadge(question),
      );
      for (const answer of state.childrenOf(question.id, "Answers")) {
        card.append(
          el(
            "div",
            { class: "answer-card", "data-node-id": answer.id },
            el("p", {}, answer.description),
          ),
        );
      }
      thread.append(card);
    }
    container.append(el("h2", {}, "questions"), thread);
  }
  return container;
}

function renderCategoryCluster(
  category: NodeWire,
  state: SessionState,
  handlers: Handlers,
  flags: UiFlags,
): HTMLElement {
  const title = el("h3", { "data-node-id": category.id }, category.name);
  attachTooltip(title, category.name, category.description);
  const chips = el("div", { class: "chips" });
  for (const idea of state.childrenOf(category.id, "Contains")) {
    chips.append(ideaChip(idea, handlers, state));
  }
  return el(
    "div",
    { class: "category-cluster", "data-node-id": category.id },
    title,
    chips,
    addOwnForm(category, "Idea", handlers, flags.pending),
  );
}

function renderRiskCard(
  riskNode: NodeWire,
  state: SessionState,
  handlers: Handlers,
  flags: UiFlags,
): HTMLElement {
  const solution = button("solution", () => handlers.mitigate(riskNode.id), {
    class: "op-solution",
  });
  solution.disabled = flags.pending || !flags.connected;
  const card = el(
    "div",
    { class: "risk-card", "data-node-id": riskNode.id },
    el("h3", {}, riskNode.name),
    el("p", {}, riskNode.description),
    solution,
  );
  const mitigations = state.childrenOf(riskNode.id, "Mitigates");
  if (mitigations.length > 0) {
    const list = el("div", { class: "mitigation-list" });
    for (const mitigation of mitigations) {
      const entry = el(
        "div",
        {
          class: `mitigation-card${mitigation.provenance === "User" ? " user" : ""}`,
          "data-node-id": mitigation.id,
        },
        el("strong", {}, (state.isPinned(mitigation.id) ? "★ " : "") + mitigation.name),
        provenanceBadge(mitigation),
        el("p", {}, mitigation.description),
        button(
          state.isPinned(mitigation.id) ? "unpin" : "collect",
          () => handlers.togglePin(mitigation.id),
          { class: "pin-mitigation" },
        ),
      );
      list.append(entry);
    }
    card.append(list);
  }
  card.append(addOwnForm(riskNode, "Mitigation", handlers, flags.pending));
  return card;
}

// --- explored ---------------------------------------------------------------

export function renderExplored(
  entries: CollectionEntry[],
  state: SessionState,
  handlers: Handlers,
  flags: UiFlags,
): HTMLElement {
  const container = el("section", { class: "explored" });
  container.append(el("h1", {}, "explored canvas"));
  const error = errorCard(flags);
  if (error) {
    container.append(error);
  }
  if (entries.length === 0) {
    container.append(
      el(
        "p",
        { class: "empty-state" },
        "Nothing collected yet. Pin promising ideas with the collect button.",
      ),
    );
    return container;
  }
  const list = el("div", { class: "explored-list" });
  for (const entry of entries) {
    const crumbs = el("p", { class: "breadcrumbs" }, entry.path.join(" › "));
    const open = button(
      "open canvas",
      () => {
        const idea = state.ideaAncestor(entry.node.id);
        if (idea) {
          handlers.navigate({ kind: "canvas", focus: idea.id });
        }
      },
      { class: "open-canvas" },
    );
    const unpin = button("unpin", () => handlers.togglePin(entry.node.id), {
      class: "unpin",
    });
    unpin.disabled = flags.pending;
    list.append(
      el(
        "div",
        { class: "explored-card", "data-node-id": entry.node.id },
        crumbs,
        el("h3", {}, entry.node.name),
        provenanceBadge(entry.node),
        el("p", {}, entry.node.description),
        open,
        unpin,
      ),
    );
  }
  container.append(list);
  return container;
}

// --- sidebar ----------------------------------------------------------------

export function renderSidebar(
  state: SessionState,
  view: View,
  handlers: Handlers,
  flags: UiFlags,
): HTMLElement {
  const container = el("nav", { class: "sidebar" });
  if (!flags.connected) {
    container.append(
      el("div", { class: "reconnect-banner", role: "status" }, "reconnecting..."),
    );
  }
  const root = state.root();
  const overviewButton = button(
    root ? root.name : "overview",
    () => handlers.navigate({ kind: "overview" }),
    { class: `nav-overview${view.kind === "overview" ? " active" : ""}` },
  );
  container.append(overviewButton);

  const tree = el("ul", { class: "tree" });
  for (const category of state.categories()) {
    const categoryItem = el("li", { class: "tree-category", "data-node-id": category.id });
    categoryItem.append(el("span", { class: "tree-label" }, category.name));
    const ideas = el("ul", {});
    for (const idea of state.childrenOf(category.id, "Contains")) {
      const active = view.kind === "canvas" && view.focus === idea.id;
      const ideaButton = button(
        (state.isPinned(idea.id) ? "★ " : "") + idea.name,
        () => handlers.navigate({ kind: "canvas", focus: idea.id }),
        { class: `tree-idea${active ? " active" : ""}`, "data-node-id": idea.id },
      );
      ideas.append(el("li", {}, ideaButton));
    }
    categoryItem.append(ideas);
    tree.append(categoryItem);
  }
  container.append(tree);

  const exploredTab = button(
    `explored (${state.pins.length})`,
    () => handlers.navigate({ kind: "explored" }),
    { class: `nav-explored${view.kind === "explored" ? " active" : ""}` },
  );
  container.append(exploredTab);
  return container;
}
