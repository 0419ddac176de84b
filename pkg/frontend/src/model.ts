/** View-model: holds exactly what the API returned plus UI status flags.
 *
 * Every mutation happens through an explicit user action; polling only
 * reads. A failed call surfaces as an inline banner; a 401 sends the user
 * back to the token screen.
 */

import { ApiError, ForwardView, JobView, PortalApi, Principal } from "./api.js";

export interface WorkspaceState {
  me: Principal | null;
  jobs: JobView[];
  forwards: ForwardView[];
  banner: string | null;
  authRequired: boolean;
}

export class WorkspaceModel {
  state: WorkspaceState = {
    me: null,
    jobs: [],
    forwards: [],
    banner: null,
    authRequired: true,
  };
  private pollInFlight = false;

  constructor(private api: PortalApi) {}

  async login(token: string): Promise<boolean> {
    this.api.setToken(token);
    try {
      this.state.me = await this.api.whoami();
    } catch (err) {
      this.state.me = null;
      this.state.authRequired = true;
      this.state.banner = err instanceof ApiError && err.status === 401
        ? "invalid token" : describe(err);
      return false;
    }
    this.state.authRequired = false;
    this.state.banner = null;
    await this.refresh();
    return true;
  }

  async refresh(): Promise<void> {
    try {
      [this.state.jobs, this.state.forwards] = await Promise.all([
        this.api.listJobs(),
        this.api.listForwards(),
      ]);
    } catch (err) {
      this.fail(err);
    }
  }

  /** Read-only job poll; at most one in flight. */
  async pollJobs(): Promise<void> {
    if (this.pollInFlight || this.state.authRequired) return;
    this.pollInFlight = true;
    try {
      this.state.jobs = await this.api.listJobs();
    } catch (err) {
      this.fail(err);
    } finally {
      this.pollInFlight = false;
    }
  }

  async launch(node: string, appKind: string): Promise<void> {
    try {
      await this.api.launch(node, appKind);
      this.state.banner = null;
      await this.refresh();
    } catch (err) {
      if (err instanceof ApiError && err.status === 503) {
        this.state.banner = "no ports available";
      } else {
        this.fail(err);
      }
    }
  }

  async stopJob(jobId: number): Promise<void> {
    try {
      await this.api.stopJob(jobId);
      this.state.banner = null;
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
  }

  async claimForward(name: string): Promise<void> {
    try {
      await this.api.claimForward(name);
      this.state.banner = null;
      await this.refresh();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.state.banner = "name taken";
      } else {
        this.fail(err);
      }
    }
  }

  async setDestination(name: string, target: string): Promise<void> {
    const colon = target.lastIndexOf(":");
    const node = target.slice(0, colon);
    const port = Number(target.slice(colon + 1));
    if (colon < 1 || !Number.isInteger(port)) {
      this.state.banner = "destination must be node:port";
      return;
    }
    await this.forwardCall(() => this.api.setDestination(name, node, port));
  }

  async disableForward(name: string): Promise<void> {
    await this.forwardCall(() => this.api.disableForward(name));
  }

  async setMode(name: string, mode: string): Promise<void> {
    await this.forwardCall(() => this.api.setMode(name, mode));
  }

  async releaseForward(name: string): Promise<void> {
    await this.forwardCall(() => this.api.releaseForward(name));
  }

  private async forwardCall(op: () => Promise<unknown>): Promise<void> {
    try {
      await op();
      this.state.banner = null;
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
  }

  private fail(err: unknown): void {
    if (err instanceof ApiError) {
      if (err.status === 401) {
        this.state.authRequired = true;
        this.state.me = null;
        this.state.banner = "session rejected; enter a token";
        return;
      }
      if (err.status === 403) {
        this.state.banner = "not permitted";
        return;
      }
      this.state.banner = `${err.code}: ${err.message}`;
      return;
    }
    this.state.banner = describe(err);
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
