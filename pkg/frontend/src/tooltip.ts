import { el } from "./dom.js";

// Hover card revealing the full description of a category or idea name.
export function attachTooltip(target: HTMLElement, title: string, body: string): void {
  const tip = el(
    "div",
    { class: "tooltip hidden", role: "tooltip" },
    el("strong", {}, title),
    el("p", {}, body),
  );
  target.classList.add("has-tooltip");
  target.appendChild(tip);
  target.addEventListener("mouseenter", () => tip.classList.remove("hidden"));
  target.addEventListener("mouseleave", () => tip.classList.add("hidden"));
}
