/** API client with two implementations: live HTTP and recorded fixtures.
 *
 * Fixture mode lets every view render without a backend, which is also how
 * the contract tests run.
 */

import type {
  CohortSummary,
  ExperimentJob,
  FeedbackEnvelope,
} from "./types";
import envelopeFixture from "./fixtures/envelope.json";
import cohortSummaryFixture from "./fixtures/cohort_summary.json";
import experimentReportFixture from "./fixtures/experiment_report.json";

export interface Api {
  submitFeedback(
    studentId: string,
    taskId: string,
    responseText: string,
  ): Promise<FeedbackEnvelope>;
  cohortSummary(): Promise<CohortSummary>;
  startExperiment(): Promise<{ run_id: string; status: string }>;
  experimentStatus(runId: string): Promise<ExperimentJob>;
}

export class HttpError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let code = "error";
    let message = response.statusText;
    try {
      const body = await response.json();
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new HttpError(response.status, code, message);
  }
  return (await response.json()) as T;
}

export class HttpApi implements Api {
  constructor(private base = "") {}

  submitFeedback(studentId: string, taskId: string, responseText: string) {
    return request<FeedbackEnvelope>(`${this.base}/api/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        student_id: studentId,
        task_id: taskId,
        response_text: responseText,
      }),
    });
  }

  cohortSummary() {
    return request<CohortSummary>(`${this.base}/api/cohort/summary`);
  }

  startExperiment() {
    return request<{ run_id: string; status: string }>(`${this.base}/api/experiments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ seed: 15 }),
    });
  }

  experimentStatus(runId: string) {
    return request<ExperimentJob>(`${this.base}/api/experiments/${runId}`);
  }
}

/** Serves the recorded API fixtures; `pollsUntilDone` simulates a running job. */
export class FixtureApi implements Api {
  private polls = 0;

  constructor(private pollsUntilDone = 1) {}

  submitFeedback(studentId: string, taskId: string, responseText: string) {
    void studentId;
    void taskId;
    void responseText;
    return Promise.resolve(envelopeFixture as FeedbackEnvelope);
  }

  cohortSummary() {
    return Promise.resolve(cohortSummaryFixture as CohortSummary);
  }

  startExperiment() {
    this.polls = 0;
    return Promise.resolve({ run_id: "run-0001", status: "running" });
  }

  experimentStatus(runId: string) {
    this.polls += 1;
    if (this.polls < this.pollsUntilDone) {
      return Promise.resolve({ run_id: runId, status: "running" } as ExperimentJob);
    }
    return Promise.resolve({
      run_id: runId,
      status: "completed",
      report: experimentReportFixture,
    } as ExperimentJob);
  }
}

/** Poll an experiment job until it leaves the running state. */
export function pollExperiment(
  api: Api,
  runId: string,
  intervalMs = 2000,
  onTick?: (job: ExperimentJob) => void,
): Promise<ExperimentJob> {
  return new Promise((resolve, reject) => {
    const timer = setInterval(async () => {
      try {
        const job = await api.experimentStatus(runId);
        onTick?.(job);
        if (job.status !== "running") {
          clearInterval(timer);
          resolve(job);
        }
      } catch (err) {
        clearInterval(timer);
        reject(err);
      }
    }, intervalMs);
  });
}

/** Client-side submission check: an empty response never reaches the API. */
export function validateSubmission(responseText: string): string | null {
  if (responseText.trim().length === 0) {
    return "Enter your code or answer before submitting.";
  }
  return null;
}

/** Actionable banner text for the error statuses the service returns. */
export function errorBanner(err: unknown): string {
  if (err instanceof HttpError) {
    if (err.status === 409) {
      return "This portfolio has no marks yet. Record an assessment first.";
    }
    if (err.status === 502) {
      return "The feedback engine is unreachable. Try again shortly.";
    }
    if (err.status === 504) {
      return "The feedback engine timed out. Try again shortly.";
    }
    return `Request failed (${err.code}): ${err.message}`;
  }
  return "Unexpected error. Check the service log.";
}
