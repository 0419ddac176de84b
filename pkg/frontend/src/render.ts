/** HTML renderers: pure functions from state to markup strings. */

import { ForwardView, JobView } from "./api.js";
import { WorkspaceState } from "./model.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBanner(banner: string | null): string {
  if (!banner) return "";
  return `<div class="banner" role="alert">${escapeHtml(banner)}</div>`;
}

export function renderTokenScreen(banner: string | null): string {
  return `
  <section class="token-screen">
    <h1>workspace</h1>
    ${renderBanner(banner)}
    <form data-action="login">
      <label for="token-input">access token</label>
      <input id="token-input" name="token" type="password" autocomplete="off" required>
      <button type="submit">enter</button>
    </form>
  </section>`;
}

export function renderJobs(jobs: JobView[]): string {
  if (jobs.length === 0) {
    return `<p class="empty">no jobs</p>`;
  }
  const rows = jobs.map((job) => {
    const connect = job.state === "running" && job.connect_link
      ? `<a class="connect" href="${escapeHtml(job.connect_link)}" target="_blank" rel="opener">connect</a>`
      : `<span class="connect disabled">connect</span>`;
    const stop = job.state === "running"
      ? `<button data-action="stop-job" data-job="${job.job_id}">stop</button>`
      : "";
    return `
    <tr data-job-row="${job.job_id}" data-state="${escapeHtml(job.state)}">
      <td>${job.job_id}</td>
      <td>${escapeHtml(job.app_kind)}</td>
      <td>${escapeHtml(job.node)}</td>
      <td>${job.ports.join(", ")}</td>
      <td class="state">${escapeHtml(job.state)}</td>
      <td>${connect} ${stop}</td>
    </tr>`;
  });
  return `
  <table class="jobs">
    <thead><tr><th>id</th><th>kind</th><th>node</th><th>ports</th><th>state</th><th></th></tr></thead>
    <tbody>${rows.join("")}</tbody>
  </table>`;
}

export function renderForwards(forwards: ForwardView[]): string {
  if (forwards.length === 0) {
    return `<p class="empty">no forwards</p>`;
  }
  const rows = forwards.map((fwd) => {
    const name = escapeHtml(fwd.name);
    const connect = fwd.enabled
      ? `<a class="connect" href="${escapeHtml(fwd.connect_path)}" target="_blank" rel="opener">connect</a>`
      : `<span class="connect disabled">connect</span>`;
    const controls = fwd.owned
      ? `
        <form data-action="set-destination" data-name="${name}" class="inline">
          <input name="target" placeholder="node:port" size="14">
          <button type="submit">point</button>
        </form>
        <button data-action="disable-forward" data-name="${name}" ${fwd.enabled ? "" : "disabled"}>disable</button>
        <form data-action="set-mode" data-name="${name}" class="inline">
          <input name="mode" value="${escapeHtml(fwd.mode)}" size="4" pattern="[0-7]{3}">
          <button type="submit">mode</button>
        </form>
        <button data-action="release-forward" data-name="${name}">release</button>`
      : "";
    return `
    <tr data-forward-row="${name}" data-enabled="${fwd.enabled}">
      <td>${name}</td>
      <td>${fwd.destination ? escapeHtml(fwd.destination) : "(disabled)"}</td>
      <td>${escapeHtml(fwd.mode)}</td>
      <td>${fwd.owned ? "you" : `uid ${fwd.owner_uid}`}</td>
      <td>${connect} ${controls}</td>
    </tr>`;
  });
  return `
  <table class="forwards">
    <thead><tr><th>name</th><th>destination</th><th>mode</th><th>owner</th><th></th></tr></thead>
    <tbody>${rows.join("")}</tbody>
  </table>`;
}

export function renderWorkspace(state: WorkspaceState): string {
  const me = state.me;
  return `
  <header>
    <h1>workspace</h1>
    <span class="whoami">${me ? escapeHtml(me.display_name) : ""} (uid ${me ? me.uid : "?"})</span>
  </header>
  ${renderBanner(state.banner)}
  <section class="panel">
    <h2>jobs</h2>
    <form data-action="launch" class="inline">
      <input name="node" value="node-1" size="10" required>
      <select name="kind">
        <option value="token-notebook">token-notebook</option>
        <option value="echo-http">echo-http</option>
        <option value="echo-ws">echo-ws</option>
        <option value="static-site">static-site</option>
      </select>
      <button type="submit">launch</button>
    </form>
    ${renderJobs(state.jobs)}
  </section>
  <section class="panel">
    <h2>forwards</h2>
    <form data-action="claim" class="inline">
      <input name="name" placeholder="forward name" pattern="[A-Za-z0-9_.-]{1,64}" required>
      <button type="submit">claim</button>
    </form>
    ${renderForwards(state.forwards)}
  </section>`;
}

export function renderApp(state: WorkspaceState): string {
  return state.authRequired ? renderTokenScreen(state.banner) : renderWorkspace(state);
}
