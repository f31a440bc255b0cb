/** A fetch stub that replays recorded exchanges in order.
 *
 * Each client request must match the next recorded exchange (method,
 * path, body, idempotency key) or the stub throws.  Indices listed in
 * dropResponseAt simulate a lost response: the exchange is consumed, as
 * the real server acted on it, but the client sees a network failure.
 */

import { expect } from "vitest";

import { FetchLike } from "../src/api.js";

export interface Exchange {
  method: string;
  path: string;
  request: unknown;
  idempotency_key: string | null;
  status: number;
  body: unknown;
}

export interface WireAttempt {
  method: string;
  url: string;
  key: string | null;
  body: unknown;
}

export interface Replay {
  fetchImpl: FetchLike;
  attempts: WireAttempt[];
  remaining(): number;
}

export function replayFetch(exchanges: Exchange[], dropResponseAt: number[] = []): Replay {
  let cursor = 0;
  const drop = new Set(dropResponseAt);
  const attempts: WireAttempt[] = [];
  const fetchImpl: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const key = init?.headers?.["Idempotency-Key"] ?? null;
    const body = init?.body === undefined ? null : JSON.parse(init.body);
    attempts.push({ method, url, key, body });
    if (cursor >= exchanges.length) {
      throw new Error(`request beyond the recorded session: ${method} ${url}`);
    }
    const expected = exchanges[cursor];
    expect(method).toBe(expected.method);
    expect(url).toBe(expected.path);
    expect(body).toEqual(expected.request ?? null);
    expect(key).toBe(expected.idempotency_key);
    const index = cursor++;
    if (drop.has(index)) throw new Error("socket closed before the response arrived");
    return { status: expected.status, json: async () => structuredClone(expected.body) };
  };
  return { fetchImpl, attempts, remaining: () => exchanges.length - cursor };
}
