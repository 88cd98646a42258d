/** Student panel: pick a task, edit a response, submit, review feedback. */

import { errorBanner, validateSubmission, type Api } from "./api";
import { renderErrorBanner, renderHistory } from "./render";
import type { FeedbackEnvelope } from "./types";

export const DEFAULT_TASKS = ["task-1", "task-2", "task-3"];

export class StudentPanel {
  history: FeedbackEnvelope[] = [];

  constructor(
    private api: Api,
    private root: HTMLElement,
  ) {}

  mount(): void {
    this.root.innerHTML = `
      <form id="feedback-form">
        <label>Student id <input name="student" value="S01" required></label>
        <label>Task
          <select name="task">
            ${DEFAULT_TASKS.map((t) => `<option value="${t}">${t}</option>`).join("")}
          </select>
        </label>
        <label class="grow">Your response
          <textarea name="response" rows="10"
            placeholder="Paste your code or answer here"></textarea>
        </label>
        <button type="submit">Submit for feedback</button>
      </form>
      <div id="student-banner"></div>
      <div id="feedback-history" aria-live="polite"></div>`;
    const form = this.root.querySelector<HTMLFormElement>("#feedback-form")!;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit(form);
    });
    this.renderHistoryPane();
  }

  async submit(form: HTMLFormElement): Promise<void> {
    const data = new FormData(form);
    const responseText = String(data.get("response") ?? "");
    const banner = this.root.querySelector<HTMLElement>("#student-banner")!;
    const validation = validateSubmission(responseText);
    if (validation !== null) {
      banner.innerHTML = renderErrorBanner(validation);
      return;
    }
    banner.innerHTML = "";
    const button = form.querySelector("button")!;
    button.disabled = true;
    try {
      const envelope = await this.api.submitFeedback(
        String(data.get("student")),
        String(data.get("task")),
        responseText,
      );
      this.history.push(envelope);
      this.renderHistoryPane();
    } catch (err) {
      banner.innerHTML = renderErrorBanner(errorBanner(err));
    } finally {
      button.disabled = false;
    }
  }

  private renderHistoryPane(): void {
    const pane = this.root.querySelector<HTMLElement>("#feedback-history")!;
    // Newest first; the response text stays in the editor for the next round.
    pane.innerHTML = renderHistory([...this.history].reverse());
  }
}
