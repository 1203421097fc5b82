import type {
  Catalog,
  CounterfactualResponse,
  PatientDetail,
  PatientPage,
  PeriodName,
  StagedIntervention,
  Taxonomy,
} from "./types.js";
import { PERIODS } from "./types.js";
import type { HistoryEntry } from "./session.js";

export const NAIVE_LABEL = "naive — baseline (may be implausible)";

const BADGE_TEXT: Record<Taxonomy, string> = {
  immutable: "\u{1F512} immutable",
  controllable: "controllable",
  intervention: "intervention",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Numbers are echoed verbatim from the API; nothing is recomputed or
 * reformatted beyond string conversion. */
export function verbatim(value: number): string {
  return String(value);
}

export function renderPatientList(
  page: PatientPage,
  onSelect: (patientId: string) => void,
): HTMLElement {
  const root = el("div", "patient-list");
  if (page.patients.length === 0) {
    root.appendChild(el("p", "empty-state", "No patients match the current filter."));
    return root;
  }
  const table = el("table");
  const head = el("tr");
  for (const title of ["patient", "risk", "outcome", "chronic"]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);
  for (const row of page.patients) {
    const tr = el("tr", "patient-row");
    tr.dataset.patientId = row.patient_id;
    tr.appendChild(el("td", undefined, row.patient_id));
    tr.appendChild(el("td", "score", verbatim(row.score)));
    tr.appendChild(el("td", undefined, verbatim(row.y)));
    tr.appendChild(el("td", undefined, row.flags.has_immutable_conditions ? "yes" : "no"));
    tr.addEventListener("click", () => onSelect(row.patient_id));
    table.appendChild(tr);
  }
  root.appendChild(table);
  root.appendChild(
    el("p", "page-info", `showing ${page.patients.length} of ${page.total}`),
  );
  return root;
}

export interface TimelineCallbacks {
  onToggle: (code: string, period: PeriodName, action: "add" | "remove") => void;
}

/** Three-column History/Past/Last grid. Immutable and controllable features
 * are display-only; only intervention-class rows get add/remove toggles. */
export function renderTimeline(
  detail: PatientDetail,
  catalog: Catalog,
  staged: StagedIntervention[],
  callbacks: TimelineCallbacks,
): HTMLElement {
  const root = el("div", "timeline");
  const header = el("div", "timeline-header");
  header.appendChild(el("span", undefined, `patient ${detail.patient_id}`));
  header.appendChild(el("span", "score", `risk ${verbatim(detail.score)}`));
  root.appendChild(header);

  const table = el("table");
  const head = el("tr");
  head.appendChild(el("th", undefined, "feature"));
  for (const period of PERIODS) head.appendChild(el("th", undefined, period));
  table.appendChild(head);

  const presentAt = (code: string, period: PeriodName) =>
    detail.present[period].includes(code);

  for (const feature of catalog.features) {
    const tr = el("tr", `feature-row taxonomy-${feature.class}`);
    tr.dataset.code = feature.code;
    const label = el("td", "feature-label");
    label.appendChild(el("span", undefined, `${feature.code} (${feature.label}) `));
    label.appendChild(el("span", `badge badge-${feature.class}`, BADGE_TEXT[feature.class]));
    tr.appendChild(label);

    for (const period of PERIODS) {
      const cell = el("td", "period-cell");
      cell.dataset.period = period;
      const present = presentAt(feature.code, period);
      cell.appendChild(el("span", "presence", present ? "●" : "·"));
      if (feature.class === "intervention") {
        const stagedHere = staged.find(
          (s) => s.code === feature.code && s.period === period,
        );
        const action: "add" | "remove" = present ? "remove" : "add";
        const button = el("button", "toggle", stagedHere ? `staged: ${stagedHere.action}` : action);
        button.addEventListener("click", () =>
          callbacks.onToggle(feature.code, period, action),
        );
        cell.appendChild(button);
      }
      tr.appendChild(cell);
    }
    table.appendChild(tr);
  }
  root.appendChild(table);
  return root;
}

export function renderResult(response: CounterfactualResponse): HTMLElement {
  const root = el("div", "cf-result");
  root.appendChild(
    el(
      "div",
      "method",
      response.method === "naive" ? NAIVE_LABEL : "sequential intervention",
    ),
  );

  const gauge = el("div", "shift-gauge");
  gauge.appendChild(el("span", "shift-label", "Δŷ"));
  gauge.appendChild(el("span", "shift-value", verbatim(response.predictive_shift)));
  gauge.appendChild(
    el(
      "span",
      "shift-scores",
      `${verbatim(response.score_factual)} → ${verbatim(response.score_counterfactual)}`,
    ),
  );
  root.appendChild(gauge);

  const changes = el("ul", "changes");
  for (const change of response.changes) {
    changes.appendChild(
      el("li", `change change-${change.direction}`, `${change.code} @ ${change.period}: ${change.direction}`),
    );
  }
  if (response.changes.length === 0) {
    changes.appendChild(el("li", "change change-none", "no bits changed"));
  }
  root.appendChild(changes);

  root.appendChild(renderVerdict(response));

  if (response.sampling) {
    root.appendChild(
      el(
        "div",
        "sampling",
        `stochastic: ${verbatim(response.sampling.n_samples)} samples, ` +
          `mean ${verbatim(response.sampling.mean_score)}, ` +
          `sd ${verbatim(response.sampling.std_score)}`,
      ),
    );
  }
  return root;
}

function renderVerdict(response: CounterfactualResponse): HTMLElement {
  const verdict = response.verdict;
  const root = el("div", "verdict");
  const rows: [string, boolean, string][] = [
    ["P1", verdict.p1_ok, "immutability: chronic history is never rewritten"],
    ["P2", verdict.p2_ok, "temporal coherence: every change traces back to an intervention"],
    ["P3", verdict.p3_ok, `state plausibility: p = ${verbatim(verdict.p3_probability)}`],
  ];
  for (const [name, ok, explanation] of rows) {
    const row = el("div", `constraint constraint-${name.toLowerCase()} ${ok ? "ok" : "violated"}`);
    row.appendChild(el("span", "constraint-name", name));
    row.appendChild(el("span", "constraint-status", ok ? "satisfied" : "VIOLATED"));
    row.appendChild(el("span", "constraint-explanation", explanation));
    root.appendChild(row);
  }
  for (const violation of verdict.violations) {
    const item = el("div", `violation violation-${violation.constraint.toLowerCase()}`);
    item.appendChild(el("strong", "violation-code", violation.code));
    item.appendChild(el("span", undefined, ` ${violation.detail}`));
    root.appendChild(item);
  }
  return root;
}

/** Session history cards, newest last, rendered side by side for comparison. */
export function renderHistory(
  history: HistoryEntry[],
  onReplay: (index: number) => void,
): HTMLElement {
  const root = el("div", "history");
  if (history.length === 0) {
    root.appendChild(el("p", "empty-state", "No what-ifs submitted yet."));
    return root;
  }
  for (let i = 0; i < history.length; i += 1) {
    const entry = history[i];
    const card = el("div", "history-card");
    const req = entry.request;
    const staged = (req.interventions ?? [])
      .map((s) => `${s.code}@${s.period}:${s.action}`)
      .join(", ");
    card.appendChild(el("div", "history-title", `#${i + 1} ${req.mode} ${staged || "(no interventions)"}`));
    card.appendChild(el("div", "history-shift", `Δŷ ${verbatim(entry.response.predictive_shift)}`));
    card.appendChild(
      el(
        "div",
        `history-verdict ${entry.response.metrics.plausible ? "ok" : "violated"}`,
        entry.response.metrics.plausible ? "plausible" : "implausible",
      ),
    );
    const replay = el("button", "replay", "replay");
    replay.addEventListener("click", () => onReplay(i));
    card.appendChild(replay);
    root.appendChild(card);
  }
  return root;
}
