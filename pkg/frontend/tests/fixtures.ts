import type {
  Catalog,
  CounterfactualResponse,
  PatientDetail,
  PatientPage,
} from "../src/types.js";

export const CATALOG: Catalog = {
  features: [
    { code: "E11", label: "Type 2 diabetes", class: "immutable" },
    { code: "N18", label: "Chronic kidney disease", class: "immutable" },
    { code: "Glucose_H", label: "High glucose", class: "controllable" },
    { code: "N17", label: "Acute kidney injury", class: "controllable" },
    { code: "Insulin", label: "Insulin", class: "intervention" },
    { code: "Lisinopril", label: "Lisinopril", class: "intervention" },
  ],
  pathways: [
    { intervention: "Insulin", target: "Glucose_H", mechanism: "glycemic control" },
    { intervention: "Lisinopril", target: "N17", mechanism: "renoprotection" },
  ],
};

export const PATIENT_PAGE: PatientPage = {
  total: 2,
  offset: 0,
  limit: 50,
  patients: [
    {
      patient_id: "p000001",
      y: 1,
      score: 0.4123456789,
      flags: { has_immutable_conditions: true },
    },
    {
      patient_id: "p000002",
      y: 0,
      score: 0.12,
      flags: { has_immutable_conditions: false },
    },
  ],
};

export const PATIENT_DETAIL: PatientDetail = {
  patient_id: "p000001",
  y: 1,
  score: 0.4123456789,
  periods: {
    history: [
      { code: "E11", label: "Type 2 diabetes", taxonomy: "immutable" },
      { code: "Glucose_H", label: "High glucose", taxonomy: "controllable" },
    ],
    past: [{ code: "E11", label: "Type 2 diabetes", taxonomy: "immutable" }],
    last: [
      { code: "E11", label: "Type 2 diabetes", taxonomy: "immutable" },
      { code: "Insulin", label: "Insulin", taxonomy: "intervention" },
    ],
  },
  present: {
    history: ["E11", "Glucose_H"],
    past: ["E11"],
    last: ["E11", "Insulin"],
  },
};

export function cfResponse(overrides: Partial<CounterfactualResponse> = {}): CounterfactualResponse {
  return {
    patient_id: "p000001",
    method: "sequential",
    score_factual: 0.41,
    score_counterfactual: 0.3299999999,
    predictive_shift: 0.0800000001,
    interventions: ["Insulin@history:add"],
    changes: [
      { code: "Insulin", period: "history", direction: "added" },
      { code: "Glucose_H", period: "past", direction: "removed" },
    ],
    metrics: { predictive_shift: 0.0800000001, plausible: true, actionable: true, sparsity: 2 },
    verdict: { p1_ok: true, p2_ok: true, p3_ok: true, p3_probability: 0.0123, violations: [] },
    factual: { history: ["E11", "Glucose_H"], past: ["E11"], last: ["E11", "Insulin"] },
    counterfactual: { history: ["E11", "Glucose_H", "Insulin"], past: ["E11"], last: ["E11", "Insulin"] },
    ...overrides,
  };
}

export interface RecordedCall {
  url: string;
  init?: RequestInit;
}

export function fakeFetch(
  handler: (url: string, init?: RequestInit) => { status?: number; body: unknown },
  calls: RecordedCall[] = [],
) {
  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const { status = 200, body } = handler(url, init);
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => body,
    } as Response;
  };
  return { fetchImpl, calls };
}
