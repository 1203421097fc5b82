import { ApiClient, ApiRequestError } from "./api.js";
import { WhatIfSession } from "./session.js";
import { NAIVE_LABEL, renderHistory, renderPatientList, renderResult, renderTimeline } from "./render.js";
import type { Catalog, PatientDetail } from "./types.js";

const api = new ApiClient("");

function mount(id: string, node: HTMLElement): void {
  const host = document.getElementById(id);
  if (!host) throw new Error(`missing mount point #${id}`);
  host.replaceChildren(node);
}

function showError(message: string): void {
  const host = document.getElementById("error");
  if (host) {
    host.textContent = message;
    host.classList.toggle("hidden", message === "");
  }
}

async function boot(): Promise<void> {
  const catalog: Catalog = await api.getCatalog();
  const session = new WhatIfSession(api, catalog);
  let detail: PatientDetail | null = null;

  const minRiskInput = document.getElementById("min-risk") as HTMLInputElement;
  const modeSelect = document.getElementById("mode") as HTMLSelectElement;
  const propagationSelect = document.getElementById("propagation") as HTMLSelectElement;
  const thetaInput = document.getElementById("theta") as HTMLInputElement;
  const seedInput = document.getElementById("seed") as HTMLInputElement;
  const samplesInput = document.getElementById("samples") as HTMLInputElement;
  const submitButton = document.getElementById("submit") as HTMLButtonElement;
  const naiveOption = modeSelect.querySelector('option[value="naive"]');
  if (naiveOption) naiveOption.textContent = NAIVE_LABEL;

  const refreshTimeline = () => {
    if (detail === null) return;
    mount(
      "timeline",
      renderTimeline(detail, catalog, session.staged, {
        onToggle: (code, period, action) => {
          const already = session.staged.find((s) => s.code === code && s.period === period);
          if (already) session.unstage(code, period);
          else session.stage(code, period, action);
          refreshTimeline();
        },
      }),
    );
  };

  const refreshHistory = () => {
    mount(
      "history",
      renderHistory(session.history, (index) => {
        void session
          .replay(index)
          .then(() => {
            refreshHistory();
            const replayed = session.history[session.history.length - 1];
            mount("result", renderResult(replayed.response));
          })
          .catch((err) => showError(String(err instanceof Error ? err.message : err)));
      }),
    );
  };

  const loadPatients = async () => {
    const minRisk = Number(minRiskInput.value || "0");
    const page = await api.getPatients({ limit: 50, minRisk });
    mount(
      "patients",
      renderPatientList(page, (patientId) => {
        void api.getPatient(patientId).then((d) => {
          detail = d;
          session.selectPatient(patientId);
          refreshTimeline();
        });
      }),
    );
  };

  minRiskInput.addEventListener("change", () => void loadPatients());

  submitButton.addEventListener("click", () => {
    showError("");
    session.settings = {
      mode: modeSelect.value === "naive" ? "naive" : "sequential",
      propagation: propagationSelect.value === "stochastic" ? "stochastic" : "deterministic",
      theta: Number(thetaInput.value || "0.5"),
      seed: Number(seedInput.value || "7"),
      samples: Number(samplesInput.value || "200"),
    };
    void session
      .submit()
      .then((entry) => {
        mount("result", renderResult(entry.response));
        refreshHistory();
      })
      .catch((err) => {
        if (err instanceof ApiRequestError) showError(`${err.code}: ${err.message}`);
        else showError(String(err instanceof Error ? err.message : err));
      });
  });

  refreshHistory();
  await loadPatients();
}

void boot().catch((err) => showError(String(err instanceof Error ? err.message : err)));
