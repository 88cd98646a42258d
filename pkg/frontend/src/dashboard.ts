/** Instructor dashboard: cohort histogram plus experiment charts. */

import { errorBanner, pollExperiment, type Api } from "./api";
import {
  renderErrorBanner,
  renderExperimentStatus,
  renderHistogram,
} from "./render";
import type { ExperimentJob } from "./types";

export class Dashboard {
  job: ExperimentJob | null = null;

  constructor(
    private api: Api,
    private root: HTMLElement,
    private pollIntervalMs = 2000,
  ) {}

  mount(): void {
    this.root.innerHTML = `
      <div id="cohort-pane"><p class="empty">Loading cohort…</p></div>
      <div class="experiment-controls">
        <button id="run-experiment">Run experiment</button>
      </div>
      <div id="experiment-pane"></div>`;
    this.root
      .querySelector<HTMLButtonElement>("#run-experiment")!
      .addEventListener("click", () => void this.runExperiment());
    void this.refreshCohort();
    this.renderExperimentPane();
  }

  async refreshCohort(): Promise<void> {
    const pane = this.root.querySelector<HTMLElement>("#cohort-pane")!;
    try {
      const summary = await this.api.cohortSummary();
      if (summary.students === 0) {
        pane.innerHTML = `<p class="empty">No cohort loaded. Create students or run the cohort generator.</p>`;
      } else {
        pane.innerHTML = renderHistogram(summary);
      }
    } catch (err) {
      pane.innerHTML = renderErrorBanner(errorBanner(err));
    }
  }

  async runExperiment(): Promise<void> {
    const button = this.root.querySelector<HTMLButtonElement>("#run-experiment")!;
    button.disabled = true;
    try {
      const started = await this.api.startExperiment();
      this.job = { run_id: started.run_id, status: "running" };
      this.renderExperimentPane();
      this.job = await pollExperiment(
        this.api,
        started.run_id,
        this.pollIntervalMs,
        (job) => {
          this.job = job;
          this.renderExperimentPane();
        },
      );
    } catch (err) {
      this.root.querySelector<HTMLElement>("#experiment-pane")!.innerHTML =
        renderErrorBanner(errorBanner(err));
      return;
    } finally {
      button.disabled = false;
    }
    this.renderExperimentPane();
  }

  private renderExperimentPane(): void {
    this.root.querySelector<HTMLElement>("#experiment-pane")!.innerHTML =
      renderExperimentStatus(this.job);
  }
}
