/** Typed client for the session service.
 *
 * Every method maps to one endpoint and returns the parsed JSON body.
 * Service-reported failures ({code, message} bodies) raise ServiceError
 * with both fields verbatim; transport failures raise NetworkError.
 * respond() retries transport failures with the SAME idempotency key,
 * so a retried submit can never consume budget twice.
 */

export interface HttpResponse {
  status: number;
  json(): Promise<unknown>;
}

export interface FetchInit {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}

export type FetchLike = (url: string, init?: FetchInit) => Promise<HttpResponse>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

/** 409: the server is at a different step than this client thinks. */
export class OutOfOrderError extends ServiceError {
  constructor(status: number, code: string, message: string, readonly step: number | null) {
    super(status, code, message);
    this.name = "OutOfOrderError";
  }
}

export class NetworkError extends Error {
  constructor(message: string, readonly attempts: number) {
    super(message);
    this.name = "NetworkError";
  }
}

export interface SessionConfig {
  bundle: string;
  strategy: string;
  budget: number;
  seed: number;
  abst_prior?: unknown;
}

export type Choice = { label: number } | { abstain: true };

export interface ClientOptions {
  retries?: number;
  sleep?: (ms: number) => Promise<void>;
  retryDelayMs?: number;
}

const DEFAULT_RETRIES = 2;

function defaultSleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function errorOf(response: HttpResponse): Promise<ServiceError> {
  let code = "unknown_error";
  let message = `HTTP ${response.status}`;
  let step: number | null = null;
  try {
    const body = (await response.json()) as Record<string, unknown>;
    if (typeof body.code === "string") code = body.code;
    if (typeof body.message === "string") message = body.message;
    if (typeof body.step === "number") step = body.step;
  } catch {
    // non-JSON error body; keep the fallbacks
  }
  if (response.status === 409) return new OutOfOrderError(response.status, code, message, step);
  return new ServiceError(response.status, code, message);
}

export class ApiClient {
  private readonly retries: number;
  private readonly sleep: (ms: number) => Promise<void>;
  private readonly retryDelayMs: number;

  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike,
    options: ClientOptions = {},
  ) {
    this.retries = options.retries ?? DEFAULT_RETRIES;
    this.sleep = options.sleep ?? defaultSleep;
    this.retryDelayMs = options.retryDelayMs ?? 250;
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
    headers?: Record<string, string>,
  ): Promise<unknown> {
    const init: FetchInit = { method, headers: { ...headers } };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json", ...headers };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.base + path, init);
    if (response.status >= 400) throw await errorOf(response);
    return response.json();
  }

  createSession(config: SessionConfig): Promise<unknown> {
    return this.request("POST", "/sessions", config);
  }

  getState(id: string): Promise<unknown> {
    return this.request("GET", `/sessions/${id}`);
  }

  /** One engine step.  Network failures retry with the same key; the
   * server's replay cache turns the retry into a read. */
  async respond(id: string, choice: Choice, step: number, key: string): Promise<unknown> {
    const body = { ...choice, step };
    let lastFailure = "";
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      if (attempt > 0) await this.sleep(this.retryDelayMs * attempt);
      try {
        return await this.request("POST", `/sessions/${id}/respond`, body, {
          "Idempotency-Key": key,
        });
      } catch (err) {
        if (err instanceof ServiceError) throw err;
        lastFailure = err instanceof Error ? err.message : String(err);
      }
    }
    throw new NetworkError(
      `respond failed after ${this.retries + 1} attempts: ${lastFailure}`,
      this.retries + 1,
    );
  }

  predictions(id: string): Promise<unknown> {
    return this.request("GET", `/sessions/${id}/predictions`);
  }

  checkpointUrl(id: string, which: "h" | "r"): string {
    return `${this.base}/sessions/${id}/checkpoints/${which}`;
  }
}

export function newIdempotencyKey(): string {
  const c = globalThis.crypto as { randomUUID?: () => string } | undefined;
  if (c && typeof c.randomUUID === "function") return c.randomUUID();
  return `key-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}
