/** Typed client for the gateway's management REST API. */

export interface Principal {
  display_name: string;
  uid: number;
  primary_gid: number;
  groups: number[];
}

export interface JobView {
  job_id: number;
  node: string;
  ports: number[];
  app_kind: string;
  state: string;
  created_at: number;
  connect_link: string | null;
}

export interface ForwardView {
  name: string;
  owner_uid: number;
  group_gid: number;
  mode: string;
  destination: string | null;
  enabled: boolean;
  created_at: number;
  owned: boolean;
  connect_path: string;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

export class PortalApi {
  constructor(private base: string = "", private token: string = "") {}

  setToken(token: string): void {
    this.token = token;
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const response = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 204) return undefined as T;
    const text = await response.text();
    const data = text ? JSON.parse(text) : undefined;
    if (!response.ok) {
      throw new ApiError(response.status, data?.error ?? String(response.status),
        data?.message ?? response.statusText);
    }
    return data as T;
  }

  whoami(): Promise<Principal> {
    return this.call("GET", "/api/whoami");
  }

  listJobs(): Promise<JobView[]> {
    return this.call("GET", "/api/jobs");
  }

  launch(node: string, appKind: string, portCount = 1): Promise<JobView> {
    return this.call("POST", "/api/jobs", { node, app_kind: appKind, port_count: portCount });
  }

  stopJob(jobId: number): Promise<void> {
    return this.call("DELETE", `/api/jobs/${jobId}`);
  }

  listForwards(): Promise<ForwardView[]> {
    return this.call("GET", "/api/forwards");
  }

  claimForward(name: string): Promise<ForwardView> {
    return this.call("POST", "/api/forwards", { name });
  }

  setDestination(name: string, node: string, port: number): Promise<ForwardView> {
    return this.call("PUT", `/api/forwards/${name}`, { node, port });
  }

  disableForward(name: string): Promise<ForwardView> {
    return this.call("PUT", `/api/forwards/${name}`, { disabled: true });
  }

  setMode(name: string, mode: string): Promise<ForwardView> {
    return this.call("PUT", `/api/forwards/${name}/mode`, { mode });
  }

  releaseForward(name: string): Promise<void> {
    return this.call("DELETE", `/api/forwards/${name}`);
  }
}
