/** Browser wiring: event delegation over renderApp output plus the 2 s job
 * poll. The token lives in sessionStorage; it is also mirrored into the
 * portal_token cookie so connect links opened in new tabs authenticate.
 */

import { PortalApi } from "./api.js";
import { WorkspaceModel } from "./model.js";
import { renderApp } from "./render.js";

const POLL_INTERVAL_MS = 2000;
const TOKEN_KEY = "portal_token";

const api = new PortalApi("");
const model = new WorkspaceModel(api);
const root = document.getElementById("app") as HTMLElement;

function draw(): void {
  root.innerHTML = renderApp(model.state);
}

function rememberToken(token: string): void {
  sessionStorage.setItem(TOKEN_KEY, token);
  document.cookie = `portal_token=${token}; path=/; SameSite=Lax`;
}

function forgetToken(): void {
  sessionStorage.removeItem(TOKEN_KEY);
  document.cookie = "portal_token=; path=/; Max-Age=0";
}

async function handleSubmit(event: SubmitEvent): Promise<void> {
  const form = event.target as HTMLFormElement;
  const action = form.dataset.action;
  if (!action) return;
  event.preventDefault();
  const fields = new FormData(form);
  switch (action) {
    case "login": {
      const token = String(fields.get("token") ?? "");
      if (await model.login(token)) {
        rememberToken(token);
      } else {
        forgetToken();
      }
      break;
    }
    case "launch":
      await model.launch(String(fields.get("node")), String(fields.get("kind")));
      break;
    case "claim":
      await model.claimForward(String(fields.get("name")));
      break;
    case "set-destination":
      await model.setDestination(form.dataset.name ?? "", String(fields.get("target")));
      break;
    case "set-mode":
      await model.setMode(form.dataset.name ?? "", String(fields.get("mode")));
      break;
  }
  draw();
}

async function handleClick(event: MouseEvent): Promise<void> {
  const button = (event.target as HTMLElement).closest("button[data-action]");
  if (!(button instanceof HTMLButtonElement)) return;
  const name = button.dataset.name ?? "";
  switch (button.dataset.action) {
    case "stop-job":
      await model.stopJob(Number(button.dataset.job));
      break;
    case "disable-forward":
      await model.disableForward(name);
      break;
    case "release-forward":
      await model.releaseForward(name);
      break;
    default:
      return;
  }
  draw();
}

async function boot(): Promise<void> {
  document.addEventListener("submit", (event) => void handleSubmit(event));
  document.addEventListener("click", (event) => void handleClick(event));
  const stored = sessionStorage.getItem(TOKEN_KEY);
  if (stored && await model.login(stored)) {
    rememberToken(stored);
  }
  draw();
  setInterval(async () => {
    if (model.state.authRequired) return;
    const before = JSON.stringify(model.state.jobs);
    await model.pollJobs();
    if (JSON.stringify(model.state.jobs) !== before || model.state.banner) {
      draw();
    }
  }, POLL_INTERVAL_MS);
}

void boot();
