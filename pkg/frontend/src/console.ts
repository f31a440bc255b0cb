/** Turn-based session controller: one live session per instance.
 *
 * Each user action triggers one respond POST plus one state GET, then a
 * render; the screen is always rebuilt from the latest GET body, never
 * simulated locally.  While a submit is in flight the controller
 * reports busy=true and ignores further submits, so a double-click
 * cannot produce two steps.
 */

import { ApiClient, Choice, NetworkError, OutOfOrderError, ServiceError, newIdempotencyKey } from "./api.js";
import { ConsoleSessionView, SessionForm, StatePayload, validateForm, viewFrom } from "./view.js";

export type Screen =
  | { kind: "form"; error: string | null }
  | { kind: "live"; view: ConsoleSessionView; busy: boolean; notice: string | null }
  | { kind: "completed"; view: ConsoleSessionView }
  | { kind: "error"; message: string; code: string; canRetry: boolean };

export type RenderFn = (screen: Screen) => void;

interface CreatedPayload {
  id: string;
}

export class Console {
  private sessionId: string | null = null;
  private lastState: StatePayload | null = null;
  private busy = false;
  private lastForm: SessionForm | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly render: RenderFn,
    private readonly keygen: () => string = newIdempotencyKey,
  ) {}

  showForm(): void {
    this.sessionId = null;
    this.lastState = null;
    this.busy = false;
    this.render({ kind: "form", error: null });
  }

  async start(form: SessionForm): Promise<void> {
    const valid = validateForm(form);
    if (typeof valid === "string") {
      this.render({ kind: "form", error: valid });
      return;
    }
    this.lastForm = form;
    try {
      const created = (await this.api.createSession({
        bundle: valid.bundle,
        strategy: valid.strategy,
        budget: valid.budget,
        seed: valid.seed,
        ...(valid.abstPrior !== undefined ? { abst_prior: valid.abstPrior } : {}),
      })) as CreatedPayload;
      this.sessionId = created.id;
      await this.refresh(null);
    } catch (err) {
      this.fail(err, true);
    }
  }

  /** Re-run the last failed action; for create failures that is start(). */
  async retry(): Promise<void> {
    if (this.sessionId === null) {
      if (this.lastForm !== null) await this.start(this.lastForm);
      return;
    }
    await this.refresh(null);
  }

  async submit(choice: Choice): Promise<void> {
    if (this.busy || this.sessionId === null || this.lastState === null) return;
    const query = this.lastState.query;
    if (query === null) return;
    this.busy = true;
    this.render({ kind: "live", view: viewFrom(this.lastState), busy: true, notice: null });
    try {
      await this.api.respond(this.sessionId, choice, query.t, this.keygen());
      this.busy = false;
      await this.refresh(null);
    } catch (err) {
      this.busy = false;
      if (err instanceof OutOfOrderError) {
        await this.refresh("another client advanced this session; resynced");
        return;
      }
      this.fail(err, err instanceof NetworkError);
    }
  }

  private async refresh(notice: string | null): Promise<void> {
    if (this.sessionId === null) return;
    let state: StatePayload;
    try {
      state = (await this.api.getState(this.sessionId)) as StatePayload;
    } catch (err) {
      this.fail(err, true);
      return;
    }
    this.lastState = state;
    const view = viewFrom(state);
    if (view.completed) {
      this.render({ kind: "completed", view });
    } else {
      this.render({ kind: "live", view, busy: false, notice });
    }
  }

  private fail(err: unknown, canRetry: boolean): void {
    if (err instanceof ServiceError) {
      this.render({ kind: "error", message: err.message, code: err.code, canRetry });
    } else {
      const message = err instanceof Error ? err.message : String(err);
      this.render({ kind: "error", message, code: "network", canRetry });
    }
  }
}
