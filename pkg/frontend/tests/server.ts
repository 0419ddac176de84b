/** Spawns a real gateway process for end-to-end tests; the UI consumes it
 * purely through its HTTP interfaces. */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface PortalHandle {
  base: string;
  nodeIp: string;
  stop: () => Promise<void>;
}

let instance = 0;

export const TOKENS = { alice: "ui-alice", bob: "ui-bob" };

export async function startPortal(): Promise<PortalHandle> {
  const n = ++instance;
  const nodeIp = `127.0.201.${n}`;
  const dir = mkdtempSync(join(tmpdir(), "portal-ui-"));
  const config = `
gateway:
  listen: 127.0.0.1:0
registry:
  root: ${dir}/registry
ident:
  ttl: 2.0
scheduler:
  port_range: [23000, 23019]
nodes:
  node-1: ${nodeIp}
users:
  alice:
    token: ${TOKENS.alice}
    uid: 100
    gid: 100
    groups: [100]
  bob:
    token: ${TOKENS.bob}
    uid: 101
    gid: 101
`;
  const configPath = join(dir, "portal.yaml");
  writeFileSync(configPath, config);
  const proc: ChildProcess = spawn("python3", ["-m", "portalgate.cli", "serve", "-c", configPath], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  const base = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("gateway did not start")), 20000);
    let buffer = "";
    proc.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/gateway listening on (\S+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    proc.stderr!.on("data", () => undefined);
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`gateway exited early (${code})`));
    });
  });
  // wait until it answers
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${base}/healthz`);
      if (res.ok) break;
    } catch {
      await new Promise((r) => setTimeout(r, 50));
    }
  }
  return {
    base,
    nodeIp,
    stop: () =>
      new Promise<void>((resolve) => {
        proc.once("exit", () => resolve());
        proc.kill("SIGTERM");
        setTimeout(() => {
          proc.kill("SIGKILL");
          resolve();
        }, 5000).unref();
      }),
  };
}
