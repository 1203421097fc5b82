/** Shapes returned by the read-only counterfactual service. */

export type Taxonomy = "immutable" | "controllable" | "intervention";
export type PeriodName = "history" | "past" | "last";

export const PERIODS: PeriodName[] = ["history", "past", "last"];

export interface CatalogFeature {
  code: string;
  label: string;
  class: Taxonomy;
}

export interface Catalog {
  features: CatalogFeature[];
  pathways: { intervention: string; target: string; mechanism: string }[];
}

export interface PatientRow {
  patient_id: string;
  y: number;
  score: number;
  flags: { has_immutable_conditions: boolean };
}

export interface PatientPage {
  total: number;
  offset: number;
  limit: number;
  patients: PatientRow[];
}

export interface PatientDetail {
  patient_id: string;
  y: number;
  score: number;
  periods: Record<PeriodName, { code: string; label: string; taxonomy: Taxonomy }[]>;
  present: Record<PeriodName, string[]>;
}

export interface StagedIntervention {
  code: string;
  period: PeriodName;
  action: "add" | "remove";
}

export interface CounterfactualRequest {
  patient_id: string;
  mode: "sequential" | "naive";
  interventions?: StagedIntervention[];
  propagation?: "deterministic" | "stochastic";
  theta?: number;
  seed?: number;
  samples?: number;
}

export interface Violation {
  constraint: "P1" | "P2" | "P3";
  code: string;
  period: PeriodName | null;
  detail: string;
}

export interface Verdict {
  p1_ok: boolean;
  p2_ok: boolean;
  p3_ok: boolean;
  p3_probability: number;
  violations: Violation[];
}

export interface CounterfactualResponse {
  patient_id: string;
  method: "sequential" | "naive";
  score_factual: number;
  score_counterfactual: number;
  predictive_shift: number;
  interventions: string[];
  changes: { code: string; period: PeriodName; direction: "added" | "removed" }[];
  metrics: {
    predictive_shift: number;
    plausible: boolean;
    actionable: boolean;
    sparsity: number;
  };
  verdict: Verdict;
  factual: Record<PeriodName, string[]>;
  counterfactual: Record<PeriodName, string[]>;
  sampling?: {
    n_samples: number;
    mean_score: number;
    std_score: number;
    majority_score: number;
  };
}

export interface ApiError {
  error: { code: string; message: string; field?: string };
}
