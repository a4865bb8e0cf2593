import { z } from "zod";

/**
 * Response shapes for the planning service's /v1 API.
 *
 * Every payload that crosses the wire is parsed through one of these schemas
 * before the rest of the app touches it, so a drifting server shows up as a
 * loud parse error at the boundary instead of NaN in a table cell. Schemas
 * validate the fields the console consumes and pass the rest through.
 */

export const controlRangeSchema = z
  .object({
    min: z.number(),
    max: z.number().optional(),
    value: z.number().nullable(),
  })
  .passthrough();

export const metricControlSchema = z
  .object({
    id: z.string(),
    bound_kind: z.enum(["max", "min"]),
    value: z.number().nullable(),
    min: z.number(),
    max: z.number(),
  })
  .passthrough();

export const segmentSchema = z
  .object({
    id: z.string(),
    downstream_id: z.string().nullable(),
    length_km: z.number(),
    foot_elevation_m: z.number(),
    drainage_area_km2: z.number(),
    mean_slope: z.number(),
    natural_barrier: z.boolean(),
  })
  .passthrough();

export const networkSchema = z
  .object({
    segments: z.array(segmentSchema),
    baseline: z
      .object({
        fragmented_ids: z.array(z.string()),
        free_flowing_km: z.number(),
        total_length_km: z.number(),
      })
      .passthrough(),
    controls: z
      .object({
        min_free_flowing_km: controlRangeSchema,
        energy_price_usd_per_kwh: controlRangeSchema,
        capacity_price_usd_per_kw_yr: controlRangeSchema,
        metrics: z.array(metricControlSchema),
      })
      .passthrough(),
  })
  .passthrough();

export const variantSchema = z
  .object({
    id: z.string(),
    segment_id: z.string(),
    scheme: z.string(),
    installed_kw: z.number(),
    flooded_area_km2: z.number(),
    passable: z.boolean(),
  })
  .passthrough();

export const candidatesSchema = z
  .object({
    variants: z.array(variantSchema),
    conflicts: z.array(
      z.object({ a: z.string(), b: z.string(), reason: z.string() }).passthrough()
    ),
  })
  .passthrough();

// One entry per what-if solve, priced against the run it amended.
export const ledgerEntrySchema = z
  .object({
    run_id: z.string(),
    baseline_run_id: z.string(),
    baseline_objective_usd_per_yr: z.number(),
    objective_usd_per_yr: z.number().nullable(),
    revenue_delta_usd_per_yr: z.number().nullable(),
    overrides: z.record(z.unknown()),
  })
  .passthrough();

export const runSchema = z
  .object({
    run_id: z.string(),
    created_at: z.number(),
    status: z.string(),
    completed_at: z.number().nullable(),
    parent_run_id: z.string().nullable(),
    overrides: z.record(z.unknown()),
    ledger: z.array(ledgerEntrySchema),
    error: z.string().nullable(),
  })
  .passthrough();

export const runsSchema = z.object({ runs: z.array(runSchema) }).passthrough();

// Table columns are served pre-computed; the client never derives them.
export const alternativeSummarySchema = z
  .object({
    net_revenue_usd_per_yr: z.number(),
    project_count: z.number(),
    installed_mw: z.number(),
    free_flowing_km: z.number(),
    flooded_km2: z.number(),
  })
  .passthrough();

export const alternativeSchema = z
  .object({
    rank: z.number(),
    objective_usd_per_yr: z.number(),
    selection: z.array(z.string()),
    x: z.record(z.number()),
    y: z.record(z.number()),
    dispatch: z.record(z.unknown()),
    expected_energy_kwh: z.record(z.number()),
    metrics: z.record(z.number()),
    satisfaction: z.record(z.number()),
    summary: alternativeSummarySchema,
  })
  .passthrough();

export const poolSchema = z
  .object({
    status: z.string(),
    final_gap: z.number().nullable(),
    best_bound: z.number().nullable(),
    n_lp_solves: z.number(),
    alternatives: z.array(alternativeSchema),
  })
  .passthrough();

export const jobProgressSchema = z
  .object({
    pool_size: z.number().nullable().optional(),
    objective: z.number().nullable().optional(),
    bound: z.number().nullable().optional(),
    gap: z.number().nullable().optional(),
    lp_solves: z.number().nullable().optional(),
  })
  .passthrough();

export const jobSchema = z
  .object({
    job_id: z.string(),
    status: z.enum(["queued", "running", "done", "failed"]),
    run_id: z.string().nullable(),
    progress: jobProgressSchema,
    error: z.object({ type: z.string(), message: z.string() }).passthrough().nullable(),
  })
  .passthrough();

export const solveAcceptedSchema = z
  .object({ job_id: z.string(), status: z.string() })
  .passthrough();

export const errorDocSchema = z.object({
  error: z.object({ type: z.string(), message: z.string() }).passthrough(),
});

export type ControlRange = z.infer<typeof controlRangeSchema>;
export type MetricControl = z.infer<typeof metricControlSchema>;
export type Segment = z.infer<typeof segmentSchema>;
export type NetworkDoc = z.infer<typeof networkSchema>;
export type VariantDoc = z.infer<typeof variantSchema>;
export type CandidatesDoc = z.infer<typeof candidatesSchema>;
export type LedgerEntryDoc = z.infer<typeof ledgerEntrySchema>;
export type RunDoc = z.infer<typeof runSchema>;
export type RunsDoc = z.infer<typeof runsSchema>;
export type AlternativeSummary = z.infer<typeof alternativeSummarySchema>;
export type AlternativeDoc = z.infer<typeof alternativeSchema>;
export type PoolDoc = z.infer<typeof poolSchema>;
export type JobDoc = z.infer<typeof jobSchema>;
export type SolveAccepted = z.infer<typeof solveAcceptedSchema>;

/** A single metric cap/floor to send with a solve request. */
export interface MetricBoundOverride {
  id: string;
  bound_kind: "max" | "min";
  bound: number | null;
}

/**
 * Body of POST /v1/solve, field for field. Only the keys that are present
 * are applied; everything else keeps the baseline run's value.
 */
export interface SolveOverrides {
  energy_price_usd_per_kwh?: number;
  capacity_price_usd_per_kw_yr?: number;
  min_free_flowing_km?: number;
  metric_bounds?: MetricBoundOverride[];
  force?: string[];
  forbid?: string[];
}
