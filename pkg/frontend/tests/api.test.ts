import { describe, expect, it } from "vitest";

import { ApiClient, ApiRequestError } from "../src/api.js";
import { CATALOG, PATIENT_PAGE, fakeFetch } from "./fixtures.js";

describe("ApiClient", () => {
  it("builds the patients query from filter state", async () => {
    const { fetchImpl, calls } = fakeFetch(() => ({ body: PATIENT_PAGE }));
    const api = new ApiClient("http://api", fetchImpl);
    await api.getPatients({ offset: 10, limit: 25, minRisk: 0.9 });
    expect(calls[0].url).toBe("http://api/patients?offset=10&limit=25&min_risk=0.9");
  });

  it("omits unset filters", async () => {
    const { fetchImpl, calls } = fakeFetch(() => ({ body: PATIENT_PAGE }));
    const api = new ApiClient("", fetchImpl);
    await api.getPatients();
    expect(calls[0].url).toBe("/patients");
  });

  it("returns parsed bodies untouched", async () => {
    const { fetchImpl } = fakeFetch(() => ({ body: CATALOG }));
    const api = new ApiClient("", fetchImpl);
    expect(await api.getCatalog()).toEqual(CATALOG);
  });

  it("posts counterfactual requests as JSON", async () => {
    const { fetchImpl, calls } = fakeFetch(() => ({ body: {} }));
    const api = new ApiClient("", fetchImpl);
    const request = {
      patient_id: "p000001",
      mode: "sequential" as const,
      interventions: [{ code: "Insulin", period: "history" as const, action: "add" as const }],
      seed: 13,
    };
    await api.postCounterfactual(request);
    expect(calls[0].url).toBe("/counterfactual");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual(request);
  });

  it("surfaces the service error contract", async () => {
    const { fetchImpl } = fakeFetch(() => ({
      status: 400,
      body: { error: { code: "invalid_intervention", message: "E11 is immutable", field: "interventions[0]" } },
    }));
    const api = new ApiClient("", fetchImpl);
    const err = await api
      .postCounterfactual({ patient_id: "x", mode: "sequential" })
      .then(() => null, (e: unknown) => e as ApiRequestError);
    expect(err).toBeInstanceOf(ApiRequestError);
    expect(err?.status).toBe(400);
    expect(err?.code).toBe("invalid_intervention");
    expect(err?.field).toBe("interventions[0]");
  });
});
