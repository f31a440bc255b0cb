/** Derive everything the console shows from one session-state payload.
 *
 * The view is a pure function of the last GET /sessions/{id} body; no
 * number on screen is computed by the client beyond picking fields out
 * of that body (the confidence column is the largest entry of a
 * server-sent distribution, the gauge fraction is server-sent counts).
 */

export interface TraceRow {
  t: number;
  x: number;
  y: number;
}

export interface QueryPayload {
  t: number;
  x: number;
  features: [number, number][];
  display: string | null;
  scores: [number, number][];
}

export interface UnqueriedRow {
  x: number;
  label_dist: number[];
  abstention: number;
}

export interface StatePayload {
  id: string;
  state: "awaiting_response" | "completed";
  strategy: string;
  alphabet: number;
  budget: number;
  step: number;
  remaining: number;
  trace: TraceRow[];
  query: QueryPayload | null;
  unqueried: UnqueriedRow[];
  checkpoints: { h: string; r: string };
}

export interface HistoryRow {
  t: number;
  x: number;
  answer: string;
}

export interface HeatRow {
  x: number;
  abstention: number;
}

export interface ConfidenceRow {
  x: number;
  label: number;
  confidence: number;
}

export interface ConsoleSessionView {
  id: string;
  strategy: string;
  completed: boolean;
  alphabet: number;
  budget: { total: number; used: number; remaining: number };
  query: { t: number; x: number; features: [number, number][]; display: string | null } | null;
  history: HistoryRow[];
  heat: HeatRow[];
  confidence: ConfidenceRow[];
  checkpoints: { h: string; r: string };
  rawTrace: TraceRow[];
}

export function answerText(y: number): string {
  return y === 0 ? "abstained" : `label ${y}`;
}

export function viewFrom(payload: StatePayload): ConsoleSessionView {
  const heat = payload.unqueried
    .map((row) => ({ x: row.x, abstention: row.abstention }))
    .sort((a, b) => b.abstention - a.abstention || a.x - b.x);
  const confidence = payload.unqueried
    .map((row) => {
      let best = 0;
      for (let i = 1; i < row.label_dist.length; i++) {
        if (row.label_dist[i] > row.label_dist[best]) best = i;
      }
      return { x: row.x, label: best + 1, confidence: row.label_dist[best] };
    })
    .sort((a, b) => a.confidence - b.confidence || a.x - b.x);
  return {
    id: payload.id,
    strategy: payload.strategy,
    completed: payload.state === "completed",
    alphabet: payload.alphabet,
    budget: {
      total: payload.budget,
      used: payload.step,
      remaining: payload.remaining,
    },
    query:
      payload.query === null
        ? null
        : {
            t: payload.query.t,
            x: payload.query.x,
            features: payload.query.features,
            display: payload.query.display,
          },
    history: payload.trace.map((row) => ({ t: row.t, x: row.x, answer: answerText(row.y) })),
    heat,
    confidence,
    checkpoints: payload.checkpoints,
    rawTrace: payload.trace,
  };
}

export interface SessionForm {
  bundle: string;
  strategy: string;
  budget: string;
  seed: string;
  priorCheckpoint: string;
}

export const STRATEGIES = [
  "passive",
  "max-gibbs",
  "avg-gain",
  "worst-gain",
  "avg-gain-fixed",
  "worst-gain-fixed",
] as const;

export interface ValidForm {
  bundle: string;
  strategy: string;
  budget: number;
  seed: number;
  abstPrior: unknown | undefined;
}

/** Form-level validation; returns an error string instead of a config
 * when a field would be rejected, so no request is sent at all. */
export function validateForm(form: SessionForm): ValidForm | string {
  if (!form.bundle.trim()) return "bundle name is required";
  if (!(STRATEGIES as readonly string[]).includes(form.strategy)) {
    return `unknown strategy ${form.strategy}`;
  }
  const budget = Number(form.budget);
  if (!Number.isInteger(budget) || budget < 1) {
    return "budget must be an integer >= 1";
  }
  const seed = Number(form.seed);
  if (!Number.isInteger(seed) || seed < 0) {
    return "seed must be an integer >= 0";
  }
  let abstPrior: unknown | undefined;
  if (form.priorCheckpoint.trim()) {
    try {
      abstPrior = JSON.parse(form.priorCheckpoint);
    } catch {
      return "prior checkpoint is not valid JSON";
    }
  }
  return { bundle: form.bundle.trim(), strategy: form.strategy, budget, seed, abstPrior };
}
