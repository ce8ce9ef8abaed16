// One hit at a time: fetch, render, collect a three-way choice, submit,
// advance. Judgments are final (no back navigation); a duplicate response
// advances without re-posting; an invalid submission shows an error banner
// and stays on the current hit.

import { ServiceError } from "./api.js";
import { renderDone, renderHit, renderRetry, type HitViewHandles } from "./render.js";
import type { Choice, HitPayload, Service } from "./types.js";

export class JudgeApp {
  private current: HitPayload | null = null;
  private selected: Choice | null = null;
  private view: HitViewHandles | null = null;
  private inFlight = false;
  private pending: Promise<void> = Promise.resolve();

  constructor(
    private root: HTMLElement,
    private workerId: string,
    private service: Service,
  ) {}

  start(): Promise<void> {
    return this.loadNext();
  }

  /** Resolves when the in-flight submit/fetch chain has settled. */
  settle(): Promise<void> {
    return this.pending;
  }

  private async loadNext(): Promise<void> {
    let payload: HitPayload | null;
    try {
      payload = await this.service.fetchNextHit(this.workerId);
    } catch {
      this.root.replaceChildren(renderRetry(() => {
        this.pending = this.loadNext();
      }));
      return;
    }
    this.current = payload;
    this.selected = null;
    if (payload === null) {
      this.view = null;
      this.root.replaceChildren(renderDone());
      return;
    }
    const view = renderHit(payload);
    this.view = view;
    for (const button of Object.values(view.choiceButtons)) {
      button.addEventListener("click", () => {
        this.select(button.dataset.choice as Choice);
      });
    }
    view.submitButton.addEventListener("click", () => {
      if (!this.inFlight) {
        this.pending = this.submit();
      }
    });
    this.root.replaceChildren(view.root);
  }

  private select(choice: Choice): void {
    if (!this.view) {
      return;
    }
    this.selected = choice;
    for (const button of Object.values(this.view.choiceButtons)) {
      button.classList.toggle("selected", button.dataset.choice === choice);
    }
    this.view.submitButton.disabled = false;
  }

  private async submit(): Promise<void> {
    if (!this.current || !this.selected || !this.view) {
      return;
    }
    this.inFlight = true;
    this.view.submitButton.disabled = true;
    try {
      await this.service.submitJudgment(
        this.current.hit_id, this.workerId, this.selected);
      await this.loadNext();
    } catch (err) {
      if (err instanceof ServiceError) {
        this.view.errorBanner.textContent =
          `Submission rejected (${err.status}): ${err.message}`;
        this.view.errorBanner.hidden = false;
        this.view.submitButton.disabled = false;
      } else {
        this.root.replaceChildren(renderRetry(() => {
          this.pending = this.submit();
        }));
      }
    } finally {
      this.inFlight = false;
    }
  }
}
