/** Browser wiring: render screens into #app and translate clicks into
 * controller calls.  All logic lives in console.ts/view.ts/render.ts;
 * this file only touches the DOM. */

import { ApiClient } from "./api.js";
import { Console, Screen } from "./console.js";
import { renderScreen } from "./render.js";
import { SessionForm } from "./view.js";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app element");

const app: HTMLElement = root;

function draw(screen: Screen): void {
  app.innerHTML = renderScreen(screen);
}

const client = new ApiClient("", (url, init) => fetch(url, init));
const console_ = new Console(client, draw);

function readForm(): SessionForm {
  const field = (name: string): string => {
    const el = app.querySelector(`[name="${name}"]`) as
      | HTMLInputElement
      | HTMLSelectElement
      | HTMLTextAreaElement
      | null;
    return el === null ? "" : el.value;
  };
  return {
    bundle: field("bundle"),
    strategy: field("strategy"),
    budget: field("budget"),
    seed: field("seed"),
    priorCheckpoint: field("prior"),
  };
}

app.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("[data-action]");
  if (target === null) return;
  const action = target.getAttribute("data-action");
  if (action === "start") void console_.start(readForm());
  else if (action === "label") {
    const y = Number(target.getAttribute("data-label"));
    void console_.submit({ label: y });
  } else if (action === "abstain") void console_.submit({ abstain: true });
  else if (action === "retry") void console_.retry();
  else if (action === "new-session") console_.showForm();
});

console_.showForm();
