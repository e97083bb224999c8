import { z } from "zod";

export const SCHEMA_VERSION = 1;

export const runEntrySchema = z.object({
  id: z.string(),
  rule: z.string(),
  attack: z.string().nullable(),
  beta: z.number(),
  gamma: z.number(),
  f: z.number().int(),
  n: z.number().int(),
  seed: z.number().int(),
  csv: z.string(),
  summary: z.string(),
  diverged: z.boolean(),
  avg_grad_sq: z.number(),
  final_accuracy: z.number().nullable(),
});

export const sweepIndexSchema = z.object({
  schema_version: z.number().int(),
  runs: z.array(runEntrySchema),
});

export type RunEntry = z.infer<typeof runEntrySchema>;
export type SweepIndex = z.infer<typeof sweepIndexSchema>;

/** One per-step trace, column-oriented: metric name -> values by step. */
export interface RunTrace {
  steps: number[];
  columns: Map<string, number[]>;
}

/** A (rule, beta) curve within one attack panel, aggregated over replicas. */
export interface Series {
  rule: string;
  beta: number;
  steps: number[];
  mean: number[];
  low: number[];
  high: number[];
  replicaIds: string[];
}

/** All curves sharing one attack, to be rendered as one image. */
export interface Panel {
  attack: string;
  series: Series[];
}

export const KNOWN_METRICS = [
  "loss",
  "grad_sq",
  "drift_sq",
  "dev_sq",
  "lyapunov",
  "r_norm",
  "accuracy",
] as const;

export type Metric = (typeof KNOWN_METRICS)[number];

/** Metrics whose dynamic range spans orders of magnitude. */
export const LOG_SCALE_METRICS: ReadonlySet<string> = new Set([
  "loss",
  "grad_sq",
  "drift_sq",
  "dev_sq",
  "lyapunov",
  "r_norm",
]);
