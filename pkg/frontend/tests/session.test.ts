import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { WhatIfSession } from "../src/session.js";
import { CATALOG, cfResponse, fakeFetch } from "./fixtures.js";

function makeSession(handler?: Parameters<typeof fakeFetch>[0]) {
  const { fetchImpl, calls } = fakeFetch(handler ?? (() => ({ body: cfResponse() })));
  const session = new WhatIfSession(new ApiClient("", fetchImpl), CATALOG);
  session.selectPatient("p000001");
  return { session, calls };
}

describe("WhatIfSession staging", () => {
  it("accepts intervention-class codes only", () => {
    const { session } = makeSession();
    session.stage("Insulin", "history", "add");
    expect(session.staged).toEqual([{ code: "Insulin", period: "history", action: "add" }]);
    expect(() => session.stage("E11", "history", "remove")).toThrow(/not an intervention/);
    expect(() => session.stage("Glucose_H", "past", "add")).toThrow(/not an intervention/);
    expect(() => session.stage("Unknown", "past", "add")).toThrow(/not an intervention/);
    expect(session.staged).toHaveLength(1);
  });

  it("replaces a restaged (code, period) pair instead of duplicating", () => {
    const { session } = makeSession();
    session.stage("Insulin", "history", "add");
    session.stage("Insulin", "history", "remove");
    expect(session.staged).toEqual([{ code: "Insulin", period: "history", action: "remove" }]);
    session.unstage("Insulin", "history");
    expect(session.staged).toHaveLength(0);
  });

  it("selecting a patient clears staged interventions", () => {
    const { session } = makeSession();
    session.stage("Lisinopril", "past", "add");
    session.selectPatient("p000002");
    expect(session.staged).toHaveLength(0);
  });
});

describe("WhatIfSession requests", () => {
  it("includes the seed in sequential requests so history replays deterministically", () => {
    const { session } = makeSession();
    session.settings.seed = 99;
    session.settings.propagation = "stochastic";
    session.stage("Insulin", "history", "add");
    const request = session.buildRequest();
    expect(request).toEqual({
      patient_id: "p000001",
      mode: "sequential",
      theta: 0.5,
      interventions: [{ code: "Insulin", period: "history", action: "add" }],
      propagation: "stochastic",
      seed: 99,
      samples: 200,
    });
  });

  it("naive requests carry no interventions", () => {
    const { session } = makeSession();
    session.settings.mode = "naive";
    session.stage("Insulin", "history", "add");
    expect(session.buildRequest()).toEqual({ patient_id: "p000001", mode: "naive", theta: 0.5 });
  });

  it("appends submitted request/response pairs to history", async () => {
    const { session } = makeSession();
    session.stage("Insulin", "history", "add");
    const entry = await session.submit();
    expect(session.history).toHaveLength(1);
    expect(session.history[0]).toBe(entry);
    expect(entry.response.predictive_shift).toBe(0.0800000001);
  });

  it("replay resubmits the stored request verbatim", async () => {
    const { session, calls } = makeSession();
    session.stage("Insulin", "history", "add");
    await session.submit();
    session.clearStaged();
    session.settings.seed = 12345; // must not affect the replay
    await session.replay(0);
    expect(calls).toHaveLength(2);
    expect(calls[1].init?.body).toBe(calls[0].init?.body);
    expect(session.history).toHaveLength(2);
    expect(session.history[1].request).toEqual(session.history[0].request);
  });

  it("queues submits behind the in-flight request", async () => {
    const order: string[] = [];
    let release: (() => void) | null = null;
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
      const body = JSON.parse(String(init?.body));
      if (body.seed === 1) {
        order.push("start-1");
        await gate;
        order.push("end-1");
      } else {
        order.push(`run-${body.seed}`);
      }
      return { ok: true, status: 200, json: async () => cfResponse() } as Response;
    };
    const session = new WhatIfSession(new ApiClient("", fetchImpl), CATALOG);
    session.selectPatient("p000001");

    session.settings.seed = 1;
    const first = session.submit();
    session.settings.seed = 2;
    const second = session.submit();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(order).toEqual(["start-1"]); // second waits for the first
    release!();
    await Promise.all([first, second]);
    expect(order).toEqual(["start-1", "end-1", "run-2"]);
    expect(session.history).toHaveLength(2);
  });

  it("a failed request does not block later submits", async () => {
    let attempt = 0;
    const { session } = makeSession(() => {
      attempt += 1;
      if (attempt === 1) {
        return { status: 422, body: { error: { code: "not_found_counterfactual", message: "no flip set" } } };
      }
      return { body: cfResponse() };
    });
    await expect(session.submit()).rejects.toThrow(/no flip set/);
    const entry = await session.submit();
    expect(entry.response.method).toBe("sequential");
    expect(session.history).toHaveLength(1);
  });
});
