import type { z } from "zod";
import {
  alternativeSchema,
  candidatesSchema,
  errorDocSchema,
  jobSchema,
  networkSchema,
  poolSchema,
  runSchema,
  runsSchema,
  solveAcceptedSchema,
} from "./types.js";
import type {
  AlternativeDoc,
  CandidatesDoc,
  JobDoc,
  NetworkDoc,
  PoolDoc,
  RunDoc,
  RunsDoc,
  SolveAccepted,
  SolveOverrides,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx reply from the service, carrying its structured error body. */
export class ApiError extends Error {
  readonly status: number;
  readonly errorType: string;

  constructor(status: number, errorType: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.errorType = errorType;
  }
}

/**
 * Thin typed client for the planning service /v1 API.
 *
 * Each method maps to one endpoint, parses the reply through its schema and
 * returns the typed document. Error bodies ({"error": {type, message}})
 * become ApiError so callers can route a 400 back to the offending control.
 */
export class PlannerApi {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? globalThis.fetch.bind(globalThis);
  }

  private async request<T>(schema: z.ZodType<T>, path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`, init);
    let body: unknown = null;
    try {
      body = await res.json();
    } catch {
      body = null;
    }
    if (!res.ok) {
      const err = errorDocSchema.safeParse(body);
      if (err.success) {
        throw new ApiError(res.status, err.data.error.type, err.data.error.message);
      }
      throw new ApiError(res.status, "HttpError", `unexpected ${res.status} from ${path}`);
    }
    return schema.parse(body);
  }

  network(): Promise<NetworkDoc> {
    return this.request(networkSchema, "/v1/network");
  }

  candidates(): Promise<CandidatesDoc> {
    return this.request(candidatesSchema, "/v1/candidates");
  }

  runs(): Promise<RunsDoc> {
    return this.request(runsSchema, "/v1/runs");
  }

  run(runId: string): Promise<RunDoc> {
    return this.request(runSchema, `/v1/runs/${encodeURIComponent(runId)}`);
  }

  pool(runId: string): Promise<PoolDoc> {
    return this.request(poolSchema, `/v1/runs/${encodeURIComponent(runId)}/pool`);
  }

  alternative(runId: string, index: number): Promise<AlternativeDoc> {
    return this.request(
      alternativeSchema,
      `/v1/runs/${encodeURIComponent(runId)}/alternatives/${index}`
    );
  }

  /** Queue a solve. The reply only acknowledges; progress comes from job(). */
  solve(overrides: SolveOverrides, baselineRunId?: string | null): Promise<SolveAccepted> {
    return this.request(solveAcceptedSchema, "/v1/solve", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ overrides, baseline_run_id: baselineRunId ?? null }),
    });
  }

  job(jobId: string): Promise<JobDoc> {
    return this.request(jobSchema, `/v1/jobs/${encodeURIComponent(jobId)}`);
  }
}
