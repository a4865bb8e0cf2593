import { ApiError, PlannerApi } from "./api.js";
import { JobFailedError, pollJob } from "./jobs.js";
import {
  applyRunOverrides,
  attributeServerError,
  baseControls,
  controlValuesFrom,
  validateControls,
} from "./controls.js";
import type { ControlErrors, ControlValues, EffectiveControls } from "./controls.js";
import { ledgerLines } from "./ledger.js";
import type { LedgerLine } from "./ledger.js";
import { mapModel } from "./map.js";
import type { DamSite, MapModel } from "./map.js";
import { createStore } from "./store.js";
import type { Listener, Store } from "./store.js";
import type {
  AlternativeDoc,
  CandidatesDoc,
  JobDoc,
  NetworkDoc,
  PoolDoc,
  RunDoc,
} from "./types.js";

export type Phase = "loading" | "ready" | "solving";

/**
 * Everything the console renders, in one bag. All numbers shown anywhere
 * originate from service responses held here; rendering only formats.
 */
export interface ViewState {
  phase: Phase;
  network: NetworkDoc | null;
  candidates: CandidatesDoc | null;
  runs: RunDoc[];
  activeRunId: string | null;
  pool: PoolDoc | null;
  selectedIndex: number | null;
  selectedAlternative: AlternativeDoc | null;
  controls: ControlValues | null;
  controlErrors: ControlErrors;
  formError: string | null;
  job: JobDoc | null;
  lastError: string | null;
}

export interface SessionOptions {
  pollIntervalMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const initialState: ViewState = {
  phase: "loading",
  network: null,
  candidates: null,
  runs: [],
  activeRunId: null,
  pool: null,
  selectedIndex: null,
  selectedAlternative: null,
  controls: null,
  controlErrors: {},
  formError: null,
  job: null,
  lastError: null,
};

/**
 * DOM-free controller for the planning console. Owns the view state and
 * every conversation with the service; the browser layer renders state
 * and forwards events. Keeping the DOM out makes the whole what-if cycle
 * testable against a live service from plain node.
 */
export class PlanningSession {
  private readonly api: PlannerApi;
  private readonly store: Store<ViewState>;
  private readonly pollIntervalMs: number;
  private readonly sleep?: (ms: number) => Promise<void>;

  constructor(api: PlannerApi, options: SessionOptions = {}) {
    this.api = api;
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
    this.sleep = options.sleep;
    this.store = createStore(initialState);
  }

  get state(): ViewState {
    return this.store.get();
  }

  subscribe(listener: Listener<ViewState>): () => void {
    return this.store.subscribe(listener);
  }

  activeRun(): RunDoc | null {
    const s = this.state;
    return s.runs.find((r) => r.run_id === s.activeRunId) ?? null;
  }

  /** Amendment chain of the active run, base first. */
  private ancestry(runId: string): RunDoc[] {
    const byId = new Map(this.state.runs.map((r) => [r.run_id, r]));
    const chain: RunDoc[] = [];
    const seen = new Set<string>();
    let cursor: string | null = runId;
    while (cursor !== null && !seen.has(cursor)) {
      seen.add(cursor);
      const rec = byId.get(cursor);
      if (!rec) {
        break;
      }
      chain.unshift(rec);
      cursor = rec.parent_run_id;
    }
    return chain;
  }

  /** Constraint settings the active run was solved under. */
  effectiveControls(): EffectiveControls | null {
    const { network, activeRunId } = this.state;
    if (!network) {
      return null;
    }
    let eff = baseControls(network);
    if (activeRunId !== null) {
      for (const run of this.ancestry(activeRunId)) {
        eff = applyRunOverrides(eff, run.overrides);
      }
    }
    return eff;
  }

  async load(): Promise<void> {
    this.store.set({ ...initialState });
    try {
      const [network, candidates, runsDoc] = await Promise.all([
        this.api.network(),
        this.api.candidates(),
        this.api.runs(),
      ]);
      const runs = [...runsDoc.runs].sort((a, b) => (a.run_id < b.run_id ? -1 : 1));
      this.store.set({ network, candidates, runs });
      const latest = [...runs].reverse().find((r) => r.status === "complete") ?? null;
      if (latest) {
        await this.activateRun(latest.run_id);
      } else {
        this.store.set({ controls: controlValuesFrom(baseControls(network)) });
      }
      this.store.set({ phase: "ready" });
    } catch (err) {
      this.store.set({ phase: "ready", lastError: describe(err) });
    }
  }

  /** Make a run current: its pool, its incumbent, its control settings. */
  private async activateRun(runId: string): Promise<void> {
    const pool = await this.api.pool(runId);
    const n = pool.alternatives.length;
    const selectedIndex = n > 0 ? n - 1 : null;
    const selectedAlternative =
      selectedIndex === null ? null : await this.api.alternative(runId, selectedIndex);
    this.store.set({
      activeRunId: runId,
      pool,
      selectedIndex,
      selectedAlternative,
      controlErrors: {},
      formError: null,
    });
    const eff = this.effectiveControls();
    if (eff) {
      this.store.set({ controls: controlValuesFrom(eff) });
    }
  }

  async selectRun(runId: string): Promise<void> {
    if (this.state.phase === "solving") {
      return;
    }
    try {
      await this.activateRun(runId);
    } catch (err) {
      this.store.set({ lastError: describe(err) });
    }
  }

  async selectAlternative(index: number): Promise<void> {
    const { pool, activeRunId } = this.state;
    if (!pool || activeRunId === null || index < 0 || index >= pool.alternatives.length) {
      return;
    }
    this.store.set({ selectedIndex: index });
    try {
      const detail = await this.api.alternative(activeRunId, index);
      this.store.set({ selectedAlternative: detail });
    } catch (err) {
      this.store.set({ lastError: describe(err) });
    }
  }

  setControls(patch: Partial<ControlValues>): void {
    const current = this.state.controls;
    if (!current) {
      return;
    }
    const cleared: ControlErrors = { ...this.state.controlErrors };
    for (const key of Object.keys(patch) as Array<keyof ControlValues>) {
      delete cleared[key];
    }
    this.store.set({
      controls: { ...current, ...patch },
      controlErrors: cleared,
      formError: null,
    });
  }

  /**
   * Validate the panel, post the overrides, ride the job to completion and
   * switch to the run it produced. Resolves with the new run id, or null
   * when nothing was submitted (validation failure, rejected request, or a
   * solve already in flight; the view state says which).
   */
  async submitWhatIf(): Promise<string | null> {
    const s = this.state;
    if (s.phase === "solving") {
      return null; // one solve at a time; the submit control is disabled anyway
    }
    const { network, controls } = s;
    const eff = this.effectiveControls();
    if (!network || !controls || !eff) {
      return null;
    }
    const verdict = validateControls(controls, network, eff);
    if (!verdict.ok) {
      this.store.set({ controlErrors: verdict.errors });
      return null;
    }
    if (Object.keys(verdict.overrides).length === 0 && s.activeRunId !== null) {
      this.store.set({ formError: "no control changed; nothing to solve" });
      return null;
    }
    this.store.set({ phase: "solving", controlErrors: {}, formError: null, job: null });
    try {
      const accepted = await this.api.solve(verdict.overrides, s.activeRunId);
      const job = await pollJob(this.api, accepted.job_id, {
        intervalMs: this.pollIntervalMs,
        sleep: this.sleep,
        onUpdate: (j) => this.store.set({ job: j }),
      });
      if (job.run_id === null) {
        throw new Error(`job ${job.job_id} finished without a run id`);
      }
      const runsDoc = await this.api.runs();
      this.store.set({
        runs: [...runsDoc.runs].sort((a, b) => (a.run_id < b.run_id ? -1 : 1)),
      });
      await this.activateRun(job.run_id);
      this.store.set({ phase: "ready" });
      return job.run_id;
    } catch (err) {
      this.reportSolveFailure(err);
      this.store.set({ phase: "ready" });
      return null;
    }
  }

  private reportSolveFailure(err: unknown): void {
    if (err instanceof ApiError && err.status === 400) {
      const target = attributeServerError(err.message);
      if (target) {
        this.store.set({ controlErrors: { [target]: err.message } });
      } else {
        this.store.set({ formError: err.message });
      }
      return;
    }
    if (err instanceof JobFailedError) {
      this.store.set({ formError: err.message });
      // the failed run is on the books; pick it up for the run list
      void this.api
        .runs()
        .then((doc) =>
          this.store.set({
            runs: [...doc.runs].sort((a, b) => (a.run_id < b.run_id ? -1 : 1)),
          })
        )
        .catch(() => undefined);
      return;
    }
    this.store.set({ formError: describe(err) });
  }

  /** Dam sites of the selected alternative, resolved against the catalog. */
  damSites(): DamSite[] {
    const { selectedAlternative, candidates } = this.state;
    if (!selectedAlternative || !candidates) {
      return [];
    }
    const byId = new Map(candidates.variants.map((v) => [v.id, v]));
    const sites: DamSite[] = [];
    for (const vid of selectedAlternative.selection) {
      const v = byId.get(vid);
      if (v) {
        sites.push({ variantId: v.id, segmentId: v.segment_id, passable: v.passable });
      }
    }
    return sites;
  }

  /** Map input for the current view; null until the network doc arrives. */
  mapModel(): MapModel | null {
    const { network, selectedAlternative } = this.state;
    if (!network) {
      return null;
    }
    return mapModel(network, selectedAlternative?.y ?? null, this.damSites());
  }

  /** Revenue-loss ledger of the active run (empty for the base run). */
  ledger(): LedgerLine[] {
    const run = this.activeRun();
    return run ? ledgerLines(run) : [];
  }
}

function describe(err: unknown): string {
  if (err instanceof Error) {
    return err.message;
  }
  return String(err);
}
