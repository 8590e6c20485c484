/** Shared test plumbing: boot a server on an ephemeral port, tiny HTTP client. */

import path from "node:path";
import { CorrectionBackend } from "../src/backend";
import { GecServer, ServerOptions } from "../src/server";

// compiled location is dist/test/, so the service root is two levels up
export const SERVICE_ROOT = path.resolve(__dirname, "..", "..");
export const REPO_ROOT = path.resolve(SERVICE_ROOT, "..");
export const GOLDEN_PATH = path.join(REPO_ROOT, "fixtures", "wire_golden.json");
export const STUB_MODEL = path.join(SERVICE_ROOT, "test", "stub_model.cjs");

export interface RunningServer {
  endpoint: string;
  close(): Promise<void>;
}

export async function startServer(
  backend: CorrectionBackend,
  options?: ServerOptions
): Promise<RunningServer> {
  const server = new GecServer(backend, options ?? { maxBatch: 32 });
  const endpoint = await server.listen(0, "127.0.0.1");
  return { endpoint, close: () => server.close() };
}

export interface HttpResult {
  status: number;
  body: unknown;
}

export async function getJson(url: string): Promise<HttpResult> {
  const res = await fetch(url);
  return { status: res.status, body: await res.json() };
}

export async function postRaw(url: string, raw: string): Promise<HttpResult> {
  const res = await fetch(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: raw,
  });
  return { status: res.status, body: await res.json() };
}

export function postJson(url: string, payload: unknown): Promise<HttpResult> {
  return postRaw(url, JSON.stringify(payload));
}
