// Rendering is a pure function of the hit payload: the DOM carries only
// sentence text, order, and highlight flags. Nothing in this module may
// reveal which system produced which panel.

import type { Choice, HitPayload, Panel } from "./types.js";

export const INSTRUCTIONS =
  "Both columns show the same review. Each column highlights the sentences " +
  "that one system selected as the best support for the classification " +
  "shown above. Pick the column whose highlighted sentences better support " +
  "that classification; if both are equally supportive (or equally " +
  "unsupportive), pick Equal.";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderPanel(panel: Panel, side: "left" | "right"): HTMLElement {
  const box = el("div", `panel ${side}`);
  for (const s of panel.sentences) {
    const span = el("span",
      s.highlight ? "sentence highlighted" : "sentence", s.text + " ");
    span.dataset.index = String(s.index);
    box.appendChild(span);
  }
  return box;
}

export interface HitViewHandles {
  root: HTMLElement;
  choiceButtons: Record<Choice, HTMLButtonElement>;
  submitButton: HTMLButtonElement;
  errorBanner: HTMLElement;
}

export function renderHit(payload: HitPayload): HitViewHandles {
  const root = el("div", "hit");

  const banner = el("div", "label-banner");
  banner.append(
    el("span", "label-caption", "This review was classified as "),
    el("strong", `label-value ${payload.doc_label}`,
      payload.doc_label.toUpperCase()),
  );
  root.appendChild(banner);
  root.appendChild(el("p", "instructions", INSTRUCTIONS));

  const columns = el("div", "columns");
  columns.appendChild(renderPanel(payload.left, "left"));
  columns.appendChild(renderPanel(payload.right, "right"));
  root.appendChild(columns);

  const controls = el("div", "controls");
  const mk = (choice: Choice, caption: string) => {
    const b = el("button", "choice", caption);
    b.dataset.choice = choice;
    return b;
  };
  const choiceButtons: Record<Choice, HTMLButtonElement> = {
    LEFT: mk("LEFT", "Left better"),
    EQUAL: mk("EQUAL", "Equal"),
    RIGHT: mk("RIGHT", "Right better"),
  };
  controls.append(choiceButtons.LEFT, choiceButtons.EQUAL, choiceButtons.RIGHT);

  const submitButton = el("button", "submit", "Submit judgment");
  submitButton.disabled = true;
  controls.appendChild(submitButton);
  root.appendChild(controls);

  const errorBanner = el("div", "error-banner");
  errorBanner.hidden = true;
  root.appendChild(errorBanner);

  return { root, choiceButtons, submitButton, errorBanner };
}

export function renderDone(): HTMLElement {
  const root = el("div", "done");
  root.appendChild(el("h2", undefined, "No tasks remaining"));
  root.appendChild(el("p", undefined,
    "Every available comparison has been judged. Thank you!"));
  return root;
}

export function renderRetry(onRetry: () => void): HTMLElement {
  const root = el("div", "retry");
  root.appendChild(el("p", undefined,
    "Could not reach the judgment service."));
  const button = el("button", "retry-button", "Try again");
  button.addEventListener("click", onRetry);
  root.appendChild(button);
  return root;
}
