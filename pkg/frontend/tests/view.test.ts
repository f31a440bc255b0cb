/** View derivation is a pure projection of the session-state payload. */

import { describe, expect, it } from "vitest";

import { StatePayload, answerText, validateForm, viewFrom } from "../src/view.js";
import fixture from "./fixtures/session.json";

const firstGet = fixture.exchanges.find((e) => e.method === "GET")!.body as unknown as StatePayload;
const lastGet = [...fixture.exchanges].reverse().find((e) => e.method === "GET")!
  .body as unknown as StatePayload;

describe("viewFrom", () => {
  it("copies the budget gauge numbers straight from the payload", () => {
    const view = viewFrom(firstGet);
    expect(view.budget).toEqual({
      total: firstGet.budget,
      used: firstGet.step,
      remaining: firstGet.remaining,
    });
    expect(view.alphabet).toBe(firstGet.alphabet);
    expect(view.id).toBe(firstGet.id);
  });

  it("maps the trace to history rows with abstentions spelled out", () => {
    const view = viewFrom(lastGet);
    expect(view.history).toEqual(
      lastGet.trace.map((row) => ({ t: row.t, x: row.x, answer: answerText(row.y) })),
    );
    expect(view.history.some((h) => h.answer === "abstained")).toBe(true);
    expect(view.rawTrace).toEqual(lastGet.trace);
  });

  it("orders the heat list by abstention, values verbatim", () => {
    const view = viewFrom(firstGet);
    const fromPayload = new Map(firstGet.unqueried.map((u) => [u.x, u.abstention]));
    expect(view.heat.length).toBe(firstGet.unqueried.length);
    for (const row of view.heat) {
      expect(row.abstention).toBe(fromPayload.get(row.x));
    }
    const values = view.heat.map((h) => h.abstention);
    expect(values).toEqual([...values].sort((a, b) => b - a));
  });

  it("confidence rows are the largest entry of each served distribution", () => {
    const view = viewFrom(firstGet);
    for (const row of view.confidence) {
      const dist = firstGet.unqueried.find((u) => u.x === row.x)!.label_dist;
      expect(row.confidence).toBe(Math.max(...dist));
      expect(dist[row.label - 1]).toBe(row.confidence);
    }
    const values = view.confidence.map((c) => c.confidence);
    expect(values).toEqual([...values].sort((a, b) => a - b));
  });

  it("flags completion and drops the query", () => {
    expect(viewFrom(firstGet).completed).toBe(false);
    expect(viewFrom(firstGet).query).not.toBeNull();
    expect(viewFrom(lastGet).completed).toBe(true);
    expect(viewFrom(lastGet).query).toBeNull();
  });
});

describe("validateForm", () => {
  const base = { bundle: "b", strategy: "avg-gain", budget: "20", seed: "0", priorCheckpoint: "" };

  it("accepts a plain form", () => {
    expect(validateForm(base)).toEqual({
      bundle: "b",
      strategy: "avg-gain",
      budget: 20,
      seed: 0,
      abstPrior: undefined,
    });
  });

  it("blocks budget 0 and non-integer budgets before any request", () => {
    expect(validateForm({ ...base, budget: "0" })).toMatch(/budget/);
    expect(validateForm({ ...base, budget: "3.5" })).toMatch(/budget/);
    expect(validateForm({ ...base, budget: "" })).toMatch(/budget/);
  });

  it("rejects unknown strategies and blank bundles", () => {
    expect(validateForm({ ...base, strategy: "frobnicate" })).toMatch(/strategy/);
    expect(validateForm({ ...base, bundle: "  " })).toMatch(/bundle/);
  });

  it("parses an optional prior checkpoint and rejects broken JSON", () => {
    const ckpt = '{"sigma2": 1.0, "bias": 0.5, "weights": [[0, 1.0]]}';
    const valid = validateForm({ ...base, priorCheckpoint: ckpt });
    expect(typeof valid).not.toBe("string");
    expect((valid as { abstPrior: unknown }).abstPrior).toEqual({
      sigma2: 1.0,
      bias: 0.5,
      weights: [[0, 1.0]],
    });
    expect(validateForm({ ...base, priorCheckpoint: "{nope" })).toMatch(/JSON/);
  });
});
