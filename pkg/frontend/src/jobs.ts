import type { PlannerApi } from "./api.js";
import type { JobDoc } from "./types.js";

/** Terminal failure reported by the job itself (not a transport error). */
export class JobFailedError extends Error {
  readonly job: JobDoc;

  constructor(job: JobDoc) {
    const detail = job.error ? `${job.error.type}: ${job.error.message}` : "no detail";
    super(`job ${job.job_id} failed (${detail})`);
    this.name = "JobFailedError";
    this.job = job;
  }
}

export interface PollOptions {
  /** Gap between status checks. The console polls once a second. */
  intervalMs?: number;
  /** Hard stop to keep a dead worker from spinning the tab forever. */
  maxAttempts?: number;
  /** Called after every status fetch, for progress displays. */
  onUpdate?: (job: JobDoc) => void;
  /** Injectable for tests; defaults to setTimeout. */
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Poll a solve job until it reaches a terminal state.
 * Resolves with the final job document on "done", throws JobFailedError on
 * "failed", and gives up with a plain Error after maxAttempts checks.
 */
export async function pollJob(
  api: PlannerApi,
  jobId: string,
  options: PollOptions = {}
): Promise<JobDoc> {
  const intervalMs = options.intervalMs ?? 1000;
  const maxAttempts = options.maxAttempts ?? 1800;
  const sleep = options.sleep ?? defaultSleep;

  let last: JobDoc | null = null;
  for (let attempt = 0; attempt < maxAttempts; attempt++) {
    last = await api.job(jobId);
    options.onUpdate?.(last);
    if (last.status === "done") {
      return last;
    }
    if (last.status === "failed") {
      throw new JobFailedError(last);
    }
    await sleep(intervalMs);
  }
  throw new Error(`job ${jobId} still ${last?.status ?? "unknown"} after ${maxAttempts} polls`);
}
