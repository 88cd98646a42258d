/** Shapes of the service API bodies the UI consumes. */

export interface FeedbackMetrics {
  fkrs: number | null;
  band: string | null;
  response_time_ms: number;
  specificity_sentences: number;
  warnings: string[];
}

export interface FeedbackEnvelope {
  student_id: string;
  task_id: string;
  feedback_text: string;
  tier_used: string;
  metrics: FeedbackMetrics;
  vote: { cluster_size: number; n: number };
  retrieved_snippet_ids: string[];
  warnings: string[];
}

export interface CohortSummary {
  students: number;
  tiers: Record<string, number>;
  mean_mark_by_tier: Record<string, number>;
  uncategorizable: number;
}

export interface ArmReading {
  task_id: string;
  condition: string;
  status: string;
  error: string | null;
  student_id: string | null;
  cluster_size: number | null;
  vote_n: number | null;
  retrieved_snippet_ids: string[];
  fkrs: number | null;
  response_time_ms: number | null;
  specificity_sentences: number | null;
  warnings: string[];
}

export type MetricKey = "fkrs" | "response_time_ms" | "specificity_sentences";

export interface ExperimentReport {
  plan: { tasks: string[]; conditions: string[]; samples_per_task: number };
  readings: ArmReading[];
  aggregates: Record<string, Record<string, Record<MetricKey, number> | null>>;
  ordering_checks: { claim: string; holds: boolean }[];
}

export interface ExperimentJob {
  run_id: string;
  status: "running" | "completed" | "failed";
  report?: ExperimentReport;
  error?: string;
}

export interface ApiError {
  code: string;
  message: string;
  detail?: string;
}
