/** Pure HTML renderers: every view is a string built from API payloads.
 *
 * Keeping these free of DOM and fetch calls is what allows the fixture-mode
 * contract tests to assert on full views in a plain node environment.
 */

import { chartData, formatMetric, groupedBarSvg } from "./charts";
import type {
  CohortSummary,
  ExperimentJob,
  ExperimentReport,
  FeedbackEnvelope,
} from "./types";

const TIER_ORDER = ["below-average", "average", "above-average"];

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderFeedback(envelope: FeedbackEnvelope): string {
  const metrics = envelope.metrics;
  const band = metrics.band ?? "n/a";
  const fkrs = metrics.fkrs === null ? "n/a" : formatMetric(metrics.fkrs);
  const snippets = envelope.retrieved_snippet_ids.length
    ? envelope.retrieved_snippet_ids
        .map((id) => `<li class="snippet-ref">${escapeHtml(id)}</li>`)
        .join("")
    : "<li class=\"snippet-ref none\">none</li>";
  return `
<article class="feedback-card">
  <header>
    <span class="task-ref">${escapeHtml(envelope.task_id)}</span>
    <span class="tier-badge tier-${envelope.tier_used}">${envelope.tier_used}</span>
    <span class="confidence" title="votes for the chosen answer">
      confidence ${envelope.vote.cluster_size}/${envelope.vote.n}</span>
    <span class="band">readability: ${escapeHtml(band)} (${fkrs})</span>
  </header>
  <pre class="feedback-text">${escapeHtml(envelope.feedback_text)}</pre>
  <footer>
    <span class="specificity">${metrics.specificity_sentences} sentences</span>
    <span class="latency">${formatMetric(metrics.response_time_ms)} ms</span>
    <details><summary>grounding</summary><ul>${snippets}</ul></details>
  </footer>
</article>`;
}

export function renderHistory(entries: FeedbackEnvelope[]): string {
  if (entries.length === 0) {
    return `<p class="empty">No feedback yet. Submit your response to get started.</p>`;
  }
  return entries.map(renderFeedback).join("\n");
}

export function renderErrorBanner(message: string): string {
  return `<div class="banner error">${escapeHtml(message)}</div>`;
}

export function renderHistogram(summary: CohortSummary): string {
  const rows = TIER_ORDER.map((tier) => {
    const count = summary.tiers[tier] ?? 0;
    const mean = summary.mean_mark_by_tier[tier];
    const width = summary.students > 0 ? (count / summary.students) * 100 : 0;
    return `
  <div class="hist-row">
    <span class="hist-label">${tier}</span>
    <span class="hist-bar tier-${tier}" style="width:${width.toFixed(1)}%"></span>
    <span class="hist-count">${count}</span>
    <span class="hist-mean">${mean === undefined ? "" : `mean ${formatMetric(mean)}`}</span>
  </div>`;
  }).join("");
  const unplaced = summary.uncategorizable
    ? `<p class="note">${summary.uncategorizable} students without enough marks</p>`
    : "";
  return `<section class="histogram">
  <h3>Cohort: ${summary.students} students</h3>${rows}${unplaced}
</section>`;
}

export function renderReportCharts(report: ExperimentReport): string {
  const charts = [
    chartData(report, "fkrs", "Readability score by skill category"),
    chartData(report, "response_time_ms", "Response time (ms) by skill category"),
    chartData(report, "specificity_sentences", "Feedback specificity (sentences) by skill category"),
  ];
  const checks = report.ordering_checks
    .map(
      (check) =>
        `<li class="${check.holds ? "holds" : "fails"}">${escapeHtml(check.claim)}: ` +
        `${check.holds ? "holds" : "fails"}</li>`,
    )
    .join("");
  return (
    charts.map(groupedBarSvg).join("\n") +
    `<details class="ordering"><summary>ordering checks</summary><ul>${checks}</ul></details>`
  );
}

export function renderExperimentStatus(job: ExperimentJob | null): string {
  if (job === null) {
    return `<p class="empty">No experiment run yet.</p>`;
  }
  if (job.status === "running") {
    return `<p class="progress">Experiment ${escapeHtml(job.run_id)} running…</p>`;
  }
  if (job.status === "failed") {
    return renderErrorBanner(`Experiment failed: ${job.error ?? "unknown error"}`);
  }
  const failed = job.report
    ? job.report.readings.filter((arm) => arm.status !== "ok")
    : [];
  const failures = failed.length
    ? `<p class="note">${failed.length} failed arms: ${failed
        .map((arm) => escapeHtml(`${arm.task_id}/${arm.condition}`))
        .join(", ")}</p>`
    : "";
  return failures + (job.report ? renderReportCharts(job.report) : "");
}
