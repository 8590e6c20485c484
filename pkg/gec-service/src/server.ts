/** HTTP server exposing a correction backend behind the wire protocol. */

import http from "node:http";
import { AddressInfo } from "node:net";
import { CorrectionBackend } from "./backend";
import { parseCorrectRequest } from "./types";

export interface ServerOptions {
  /** Inference batch cap; larger requests are sliced before the backend. */
  maxBatch: number;
}

const DEFAULTS: ServerOptions = { maxBatch: 32 };

function sendJson(res: http.ServerResponse, code: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(code, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
  });
  res.end(body);
}

function readBody(req: http.IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c: Buffer) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

export function chunked<T>(items: T[], size: number): T[][] {
  const out: T[][] = [];
  for (let i = 0; i < items.length; i += size) {
    out.push(items.slice(i, i + size));
  }
  return out;
}

export class GecServer {
  private readonly server: http.Server;
  private inference: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly backend: CorrectionBackend,
    private readonly options: ServerOptions = DEFAULTS
  ) {
    this.server = http.createServer((req, res) => {
      this.handle(req, res).catch((err: Error) => {
        if (!res.headersSent) sendJson(res, 500, { error: err.message });
      });
    });
  }

  private async handle(req: http.IncomingMessage, res: http.ServerResponse): Promise<void> {
    if (req.method === "GET" && req.url === "/health") {
      sendJson(res, 200, { status: "ok", model: this.backend.fingerprint });
      return;
    }
    if (req.method === "POST" && req.url === "/correct") {
      await this.handleCorrect(req, res);
      return;
    }
    sendJson(res, 404, { error: `unknown route ${req.method} ${req.url}` });
  }

  private async handleCorrect(
    req: http.IncomingMessage,
    res: http.ServerResponse
  ): Promise<void> {
    let parsed: unknown;
    try {
      parsed = JSON.parse(await readBody(req));
    } catch {
      sendJson(res, 400, { error: "request body is not valid JSON" });
      return;
    }
    const request = parseCorrectRequest(parsed);
    if (request === null) {
      sendJson(res, 400, { error: 'body must be {"sentences": [[string, ...], ...]}' });
      return;
    }
    let corrections: string[][];
    try {
      corrections = await this.correctAll(request.sentences);
    } catch (err) {
      sendJson(res, 500, { error: (err as Error).message });
      return;
    }
    if (corrections.length !== request.sentences.length) {
      sendJson(res, 500, {
        error: `backend produced ${corrections.length} corrections for ${request.sentences.length} sentences`,
      });
      return;
    }
    sendJson(res, 200, { corrections, model: this.backend.fingerprint });
  }

  /** Slice into maxBatch chunks and serialize them through the backend so
   *  responses never interleave across requests. */
  private correctAll(sentences: string[][]): Promise<string[][]> {
    const run = this.inference.then(async () => {
      const out: string[][] = [];
      for (const chunk of chunked(sentences, this.options.maxBatch)) {
        out.push(...(await this.backend.correctBatch(chunk)));
      }
      return out;
    });
    this.inference = run.catch(() => undefined);
    return run;
  }

  listen(port: number, host: string): Promise<string> {
    return new Promise((resolve, reject) => {
      this.server.once("error", reject);
      this.server.listen(port, host, () => {
        const addr = this.server.address() as AddressInfo;
        resolve(`http://${host}:${addr.port}`);
      });
    });
  }

  async close(): Promise<void> {
    await new Promise<void>((resolve) => this.server.close(() => resolve()));
    await this.backend.close();
  }
}
