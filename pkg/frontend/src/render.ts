/** Pure screen -> HTML string rendering.
 *
 * No DOM access and no state: the same screen value always yields the
 * same markup, which is what the replay tests assert.  Buttons carry
 * data-action attributes; event wiring happens in main.ts.
 */

import { Screen } from "./console.js";
import { ConsoleSessionView, STRATEGIES } from "./view.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function pct(fraction: number): string {
  return `${Math.round(fraction * 1000) / 10}%`;
}

function renderForm(error: string | null): string {
  const options = STRATEGIES.map(
    (s) => `<option value="${s}"${s === "avg-gain" ? " selected" : ""}>${s}</option>`,
  ).join("");
  return [
    `<section class="start-form">`,
    `<h1>Start a labeling session</h1>`,
    error === null ? "" : `<p class="form-error" role="alert">${escapeHtml(error)}</p>`,
    `<label>Bundle <input name="bundle" value="bundle"></label>`,
    `<label>Strategy <select name="strategy">${options}</select></label>`,
    `<label>Budget <input name="budget" type="number" value="20" min="1" step="1"></label>`,
    `<label>Seed <input name="seed" type="number" value="0" min="0" step="1"></label>`,
    `<label>Abstention prior checkpoint (optional JSON)`,
    `<textarea name="prior" rows="3" placeholder='{"sigma2": 1.0, "bias": 0.0, "weights": []}'></textarea></label>`,
    `<button data-action="start">Start session</button>`,
    `</section>`,
  ].join("\n");
}

function renderGauge(budget: { total: number; used: number; remaining: number }): string {
  const width = budget.total === 0 ? 0 : budget.remaining / budget.total;
  return [
    `<div class="gauge" role="meter" aria-valuenow="${budget.remaining}" aria-valuemax="${budget.total}">`,
    `<span class="gauge-fill" style="width:${pct(width)}"></span>`,
    `<span class="gauge-text">${budget.remaining} of ${budget.total} queries left</span>`,
    `</div>`,
  ].join("");
}

function renderQuery(view: ConsoleSessionView, busy: boolean): string {
  const q = view.query;
  if (q === null) return "";
  const shown =
    q.display !== null
      ? `<p class="display">${escapeHtml(q.display)}</p>`
      : `<p class="features">features: ${q.features.map(([i, v]) => `${i}:${v}`).join(" ")}</p>`;
  const disabled = busy ? " disabled" : "";
  const labels = [];
  for (let y = 1; y <= view.alphabet; y++) {
    labels.push(`<button data-action="label" data-label="${y}"${disabled}>Label ${y}</button>`);
  }
  return [
    `<section class="query">`,
    `<h2>Step ${q.t}: example x${q.x}</h2>`,
    shown,
    `<div class="choices">`,
    labels.join(""),
    `<button data-action="abstain" class="abstain"${disabled}>Abstain</button>`,
    `</div>`,
    busy ? `<p class="busy">waiting for the server...</p>` : "",
    `</section>`,
  ].join("\n");
}

function renderHistory(view: ConsoleSessionView): string {
  if (view.history.length === 0) return `<section class="history"><h2>History</h2><p>none yet</p></section>`;
  const rows = view.history
    .map((h) => `<tr><td>${h.t}</td><td>x${h.x}</td><td>${escapeHtml(h.answer)}</td></tr>`)
    .join("");
  return [
    `<section class="history"><h2>History</h2>`,
    `<table><thead><tr><th>step</th><th>example</th><th>answer</th></tr></thead>`,
    `<tbody>${rows}</tbody></table></section>`,
  ].join("");
}

function renderPosteriors(view: ConsoleSessionView): string {
  const heat = view.heat
    .map(
      (h) =>
        `<li><span class="bar" style="width:${pct(h.abstention)}"></span>` +
        `x${h.x}: ${h.abstention.toFixed(3)}</li>`,
    )
    .join("");
  const conf = view.confidence
    .map((c) => `<li>x${c.x}: label ${c.label} at ${c.confidence.toFixed(3)}</li>`)
    .join("");
  return [
    `<section class="posteriors">`,
    `<div class="heat"><h2>Predicted abstention</h2><ol>${heat}</ol></div>`,
    `<div class="confidence"><h2>Least confident predictions</h2><ol>${conf}</ol></div>`,
    `</section>`,
  ].join("\n");
}

function renderLive(view: ConsoleSessionView, busy: boolean, notice: string | null): string {
  return [
    `<header><h1>Session ${view.id}</h1><p>strategy ${view.strategy}</p>${renderGauge(view.budget)}</header>`,
    notice === null ? "" : `<p class="notice">${escapeHtml(notice)}</p>`,
    renderQuery(view, busy),
    renderHistory(view),
    renderPosteriors(view),
  ].join("\n");
}

function renderCompleted(view: ConsoleSessionView): string {
  const trace = encodeURIComponent(JSON.stringify(view.rawTrace));
  return [
    `<header><h1>Session ${view.id} complete</h1>${renderGauge(view.budget)}</header>`,
    `<section class="summary">`,
    `<p>${view.history.length} responses recorded.</p>`,
    `<a download="trace.json" href="data:application/json,${trace}">Download trace</a>`,
    `<p>Checkpoints: <a href="${view.checkpoints.h}">classifier</a> ` +
      `<a href="${view.checkpoints.r}">abstention model</a></p>`,
    `<button data-action="new-session">Start another session</button>`,
    `</section>`,
    renderHistory(view),
  ].join("\n");
}

function renderError(message: string, code: string, canRetry: boolean): string {
  return [
    `<section class="error" role="alert">`,
    `<h1>Request failed</h1>`,
    `<p class="code">${escapeHtml(code)}</p>`,
    `<p class="message">${escapeHtml(message)}</p>`,
    canRetry ? `<button data-action="retry">Retry</button>` : "",
    `<button data-action="new-session">Back to start</button>`,
    `</section>`,
  ].join("\n");
}

export function renderScreen(screen: Screen): string {
  switch (screen.kind) {
    case "form":
      return renderForm(screen.error);
    case "live":
      return renderLive(screen.view, screen.busy, screen.notice);
    case "completed":
      return renderCompleted(screen.view);
    case "error":
      return renderError(screen.message, screen.code, screen.canRetry);
  }
}
