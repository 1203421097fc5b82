import type { ApiClient } from "./api.js";
import type {
  Catalog,
  CounterfactualRequest,
  CounterfactualResponse,
  PeriodName,
  StagedIntervention,
} from "./types.js";

export interface HistoryEntry {
  /** The exact request that was submitted, seed included, so a replay is
   * byte-for-byte identical and the service answer is deterministic. */
  request: CounterfactualRequest;
  response: CounterfactualResponse;
}

export interface SessionSettings {
  mode: "sequential" | "naive";
  propagation: "deterministic" | "stochastic";
  theta: number;
  seed: number;
  samples: number;
}

const DEFAULT_SETTINGS: SessionSettings = {
  mode: "sequential",
  propagation: "deterministic",
  theta: 0.5,
  seed: 7,
  samples: 200,
};

/** In-memory what-if session: one selected patient, staged interventions,
 * and the history of submitted requests with their returned answers.
 * At most one counterfactual request is in flight; further submits queue. */
export class WhatIfSession {
  patientId: string | null = null;
  staged: StagedIntervention[] = [];
  settings: SessionSettings = { ...DEFAULT_SETTINGS };
  history: HistoryEntry[] = [];

  private queue: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly api: ApiClient,
    private readonly catalog: Catalog,
  ) {}

  selectPatient(patientId: string): void {
    this.patientId = patientId;
    this.staged = [];
  }

  isIntervention(code: string): boolean {
    const feature = this.catalog.features.find((f) => f.code === code);
    return feature !== undefined && feature.class === "intervention";
  }

  /** Stage one intervention. Only Intervention-class codes are accepted;
   * the input layer mirrors the service's 400 instead of relying on it. */
  stage(code: string, period: PeriodName, action: "add" | "remove"): void {
    if (!this.isIntervention(code)) {
      throw new Error(`${code} is not an intervention-class feature and cannot be staged`);
    }
    this.staged = this.staged.filter((s) => !(s.code === code && s.period === period));
    this.staged.push({ code, period, action });
  }

  unstage(code: string, period: PeriodName): void {
    this.staged = this.staged.filter((s) => !(s.code === code && s.period === period));
  }

  clearStaged(): void {
    this.staged = [];
  }

  buildRequest(): CounterfactualRequest {
    if (this.patientId === null) {
      throw new Error("no patient selected");
    }
    const { mode, propagation, theta, seed, samples } = this.settings;
    const request: CounterfactualRequest = { patient_id: this.patientId, mode, theta };
    if (mode === "sequential") {
      request.interventions = this.staged.map((s) => ({ ...s }));
      request.propagation = propagation;
      request.seed = seed;
      request.samples = samples;
    }
    return request;
  }

  /** Submit the currently staged what-if; queues behind any in-flight call. */
  submit(): Promise<HistoryEntry> {
    return this.enqueue(this.buildRequest());
  }

  /** Re-submit a past request verbatim; the stored seed makes it deterministic. */
  replay(index: number): Promise<HistoryEntry> {
    const entry = this.history[index];
    if (entry === undefined) {
      throw new Error(`no history entry at index ${index}`);
    }
    return this.enqueue(JSON.parse(JSON.stringify(entry.request)));
  }

  private enqueue(request: CounterfactualRequest): Promise<HistoryEntry> {
    const run = this.queue.then(async () => {
      const response = await this.api.postCounterfactual(request);
      const entry: HistoryEntry = { request, response };
      this.history.push(entry);
      return entry;
    });
    // Keep the chain alive whether or not this request fails.
    this.queue = run.catch(() => undefined);
    return run;
  }
}
