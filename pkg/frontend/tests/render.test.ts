/** Fixture-mode contract tests: full views render from recorded API bodies,
 * and every number on screen traces back to a fixture field. */

import { describe, expect, it } from "vitest";

import { FixtureApi, errorBanner, HttpError, pollExperiment, validateSubmission } from "../src/api";
import { chartData, formatMetric, groupedBarSvg } from "../src/charts";
import {
  renderExperimentStatus,
  renderFeedback,
  renderHistogram,
  renderHistory,
} from "../src/render";
import type { CohortSummary, ExperimentReport, FeedbackEnvelope } from "../src/types";
import envelopeFixture from "../src/fixtures/envelope.json";
import cohortSummaryFixture from "../src/fixtures/cohort_summary.json";
import experimentReportFixture from "../src/fixtures/experiment_report.json";

const envelope = envelopeFixture as FeedbackEnvelope;
const cohortSummary = cohortSummaryFixture as CohortSummary;
const report = experimentReportFixture as unknown as ExperimentReport;

/** Numbers visible as text content (tags stripped; identifier suffixes like
 * "task-1" and "C1" are not numbers on screen). */
function visibleNumbers(html: string): string[] {
  const text = html.replace(/<[^>]*>/g, " ");
  return [...text.matchAll(/(?<![\w-])-?\d+(?:\.\d+)?/g)].map((m) => m[0]);
}

function fixtureNumberForms(value: unknown, into: Set<string>): Set<string> {
  if (typeof value === "number") {
    into.add(String(value));
    into.add(formatMetric(value));
  } else if (Array.isArray(value)) {
    value.forEach((v) => fixtureNumberForms(v, into));
  } else if (value !== null && typeof value === "object") {
    Object.values(value).forEach((v) => fixtureNumberForms(v, into));
  }
  return into;
}

describe("student feedback panel", () => {
  const html = renderFeedback(envelope);

  it("shows the tier badge from the envelope", () => {
    expect(html).toContain(`class="tier-badge tier-below-average"`);
    expect(html).toContain(">below-average<");
  });

  it("shows vote confidence 5/5", () => {
    expect(html).toContain("confidence 5/5");
  });

  it("shows the readability band", () => {
    expect(html).toContain("readability: very easy");
  });

  it("lists retrieved snippet attributions", () => {
    for (const id of envelope.retrieved_snippet_ids) {
      expect(html).toContain(id);
    }
  });

  it("escapes feedback text", () => {
    const hostile = { ...envelope, feedback_text: "<script>alert(1)</script>" };
    expect(renderFeedback(hostile)).not.toContain("<script>");
  });

  it("every visible number has a source field in the fixture", () => {
    const allowed = fixtureNumberForms(envelope, new Set<string>());
    for (const token of visibleNumbers(html)) {
      expect(allowed, `number ${token} lacks a fixture source`).toContain(token);
    }
  });
});

describe("feedback history", () => {
  it("renders an empty state before any submission", () => {
    expect(renderHistory([])).toContain("No feedback yet");
  });

  it("keeps the given order (controller passes newest first)", () => {
    const second = { ...envelope, task_id: "task-2" };
    const html = renderHistory([second, envelope]);
    const posSecond = html.indexOf(">task-2<");
    const posFirst = html.indexOf(">task-1<");
    expect(posSecond).toBeGreaterThanOrEqual(0);
    expect(posFirst).toBeGreaterThan(posSecond);
  });
});

describe("instructor histogram", () => {
  const html = renderHistogram(cohortSummary);

  it("renders the 8/17/5 tier bars", () => {
    expect(html).toContain("below-average");
    expect(html).toContain(`<span class="hist-count">8</span>`);
    expect(html).toContain(`<span class="hist-count">17</span>`);
    expect(html).toContain(`<span class="hist-count">5</span>`);
  });

  it("shows the cohort size and per-tier means", () => {
    expect(html).toContain("30 students");
    expect(html).toContain("mean 60.8");
    expect(html).toContain("mean 72.4");
    expect(html).toContain("mean 84.6");
  });

  it("every visible number has a source field in the fixture", () => {
    const allowed = fixtureNumberForms(cohortSummary, new Set<string>());
    for (const token of visibleNumbers(html)) {
      expect(allowed, `number ${token} lacks a fixture source`).toContain(token);
    }
  });
});

describe("experiment charts", () => {
  it("builds 3 charts x 4 condition groups x 3 task bars from 12 readings", () => {
    expect(report.readings).toHaveLength(12);
    for (const metric of ["fkrs", "response_time_ms", "specificity_sentences"] as const) {
      const data = chartData(report, metric, metric);
      expect(data.groups).toHaveLength(4);
      for (const group of data.groups) {
        expect(group.bars).toHaveLength(3);
      }
    }
  });

  it("renders one rect and one value label per bar", () => {
    const data = chartData(report, "specificity_sentences", "specificity");
    const svg = groupedBarSvg(data);
    expect(svg.match(/<rect /g)).toHaveLength(12);
    expect(svg.match(/class="bar-value"/g)).toHaveLength(12);
    expect(svg).toContain(">14<");
    expect(svg).toContain(">9<");
    expect(svg).toContain(">5<");
    expect(svg).toContain(">3<");
  });

  it("completed job view lists ordering checks and all charts", () => {
    const html = renderExperimentStatus({
      run_id: "run-0001",
      status: "completed",
      report,
    });
    expect(html.match(/<figure class="chart">/g)).toHaveLength(3);
    expect(html).toContain("task-1:C1: holds");
    expect(html.match(/class="bar-value"/g)).toHaveLength(36);
  });

  it("every visible number has a source field in the fixture", () => {
    const html = renderExperimentStatus({
      run_id: "run-0001",
      status: "completed",
      report,
    });
    const allowed = fixtureNumberForms(report, new Set<string>());
    for (const token of visibleNumbers(html)) {
      expect(allowed, `number ${token} lacks a fixture source`).toContain(token);
    }
  });

  it("running and failed states are visible", () => {
    expect(renderExperimentStatus({ run_id: "run-0001", status: "running" })).toContain(
      "running",
    );
    expect(
      renderExperimentStatus({ run_id: "run-0001", status: "failed", error: "boom" }),
    ).toContain("boom");
    expect(renderExperimentStatus(null)).toContain("No experiment run yet");
  });
});

describe("fixture api + polling", () => {
  it("serves the recorded envelope without a backend", async () => {
    const api = new FixtureApi();
    const result = await api.submitFeedback("S01", "task-1", "code");
    expect(result.tier_used).toBe("below-average");
    expect(result.vote).toEqual({ cluster_size: 5, n: 5 });
  });

  it("polls until the job completes", async () => {
    const api = new FixtureApi(3);
    const started = await api.startExperiment();
    const states: string[] = [];
    const job = await pollExperiment(api, started.run_id, 1, (j) => states.push(j.status));
    expect(job.status).toBe("completed");
    expect(states.filter((s) => s === "running")).toHaveLength(2);
    expect(job.report?.readings).toHaveLength(12);
  });
});

describe("client-side guards", () => {
  it("blocks empty submissions before any network call", () => {
    expect(validateSubmission("")).toMatch(/before submitting/);
    expect(validateSubmission("   \n")).toMatch(/before submitting/);
    expect(validateSubmission("print('hi')")).toBeNull();
  });

  it("maps service errors to actionable banners", () => {
    expect(errorBanner(new HttpError(409, "insufficient-data", "x"))).toContain(
      "no marks yet",
    );
    expect(errorBanner(new HttpError(502, "gateway-error", "x"))).toContain("unreachable");
    expect(errorBanner(new HttpError(504, "gateway-timeout", "x"))).toContain("timed out");
  });
});
