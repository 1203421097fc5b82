import type {
  Catalog,
  CounterfactualRequest,
  CounterfactualResponse,
  PatientDetail,
  PatientPage,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  readonly code: string;
  readonly field?: string;
  readonly status: number;

  constructor(status: number, code: string, message: string, field?: string) {
    super(message);
    this.status = status;
    this.code = code;
    this.field = field;
  }
}

/** Thin typed client; every number shown in the UI comes straight out of
 * these responses — the client never recomputes risk or metrics. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      const err = body?.error ?? {};
      throw new ApiRequestError(
        response.status,
        err.code ?? "unknown",
        err.message ?? `request failed with status ${response.status}`,
        err.field,
      );
    }
    return body as T;
  }

  getCatalog(): Promise<Catalog> {
    return this.request<Catalog>("/catalog");
  }

  getPatients(opts: { offset?: number; limit?: number; minRisk?: number } = {}): Promise<PatientPage> {
    const params = new URLSearchParams();
    if (opts.offset !== undefined) params.set("offset", String(opts.offset));
    if (opts.limit !== undefined) params.set("limit", String(opts.limit));
    if (opts.minRisk !== undefined) params.set("min_risk", String(opts.minRisk));
    const query = params.toString();
    return this.request<PatientPage>(`/patients${query ? "?" + query : ""}`);
  }

  getPatient(patientId: string): Promise<PatientDetail> {
    return this.request<PatientDetail>(`/patients/${encodeURIComponent(patientId)}`);
  }

  postCounterfactual(body: CounterfactualRequest): Promise<CounterfactualResponse> {
    return this.request<CounterfactualResponse>("/counterfactual", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
