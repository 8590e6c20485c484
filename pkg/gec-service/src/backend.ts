/**
 * Correction backends.
 *
 * A backend consumes token lists and returns corrected token lists; the
 * server handles the HTTP surface and batching.  The command backend wraps
 * any model process (e.g. the Gramformer bridge in ../bridge/) over a
 * line-delimited JSON stdio protocol:
 *
 *   -> {"id": 1, "texts": ["I has a dog", ...]}
 *   <- {"id": 1, "texts": ["I have a dog", ...]}
 *
 * Tokens are joined with single spaces for the model and its detokenized
 * output is re-tokenized on whitespace, which can shift counts slightly
 * versus tokenizer-faithful pipelines; the fingerprint records the model
 * so downstream caches never mix sources.
 */

import { spawn, ChildProcessByStdio } from "node:child_process";
import { createInterface, Interface } from "node:readline";
import type { Readable, Writable } from "node:stream";

export interface CorrectionBackend {
  /** Model identity + decode settings, e.g. "gramformer@1+greedy". */
  readonly fingerprint: string;
  correctBatch(sentences: string[][]): Promise<string[][]>;
  close(): Promise<void>;
}

/** Returns every sentence unchanged; the protocol-conformance baseline. */
export class EchoBackend implements CorrectionBackend {
  readonly fingerprint: string;

  constructor(modelId: string = "echo@1") {
    this.fingerprint = `${modelId}+greedy`;
  }

  async correctBatch(sentences: string[][]): Promise<string[][]> {
    return sentences.map((s) => [...s]);
  }

  async close(): Promise<void> {}
}

interface BridgeResponse {
  id: number;
  texts?: string[];
  error?: string;
}

/** Spawns a model process and serializes all inference through it. */
export class CommandBackend implements CorrectionBackend {
  readonly fingerprint: string;
  private readonly child: ChildProcessByStdio<Writable, Readable, null>;
  private readonly lines: Interface;
  private readonly pending = new Map<
    number,
    { resolve: (r: BridgeResponse) => void; reject: (e: Error) => void }
  >();
  private nextId = 1;
  private queue: Promise<unknown> = Promise.resolve();
  private closed = false;

  constructor(command: string, modelId: string, env: NodeJS.ProcessEnv = {}) {
    this.fingerprint = `${modelId}+greedy`;
    this.child = spawn(command, {
      shell: true,
      stdio: ["pipe", "pipe", "inherit"],
      env: { ...process.env, ...env },
    });
    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on("line", (line) => this.onLine(line));
    this.child.on("exit", (code) => this.onExit(code));
    this.child.on("error", (err) => this.failAll(new Error(`model process: ${err.message}`)));
  }

  private onLine(line: string): void {
    let message: BridgeResponse;
    try {
      message = JSON.parse(line) as BridgeResponse;
    } catch {
      this.failAll(new Error(`model process wrote non-JSON line: ${line}`));
      return;
    }
    const waiter = this.pending.get(message.id);
    if (waiter) {
      this.pending.delete(message.id);
      waiter.resolve(message);
    }
  }

  private onExit(code: number | null): void {
    if (!this.closed) {
      this.failAll(new Error(`model process exited with code ${code}`));
    }
  }

  private failAll(error: Error): void {
    for (const { reject } of this.pending.values()) reject(error);
    this.pending.clear();
  }

  private roundTrip(texts: string[]): Promise<string[]> {
    const id = this.nextId++;
    const result = new Promise<BridgeResponse>((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.child.stdin.write(JSON.stringify({ id, texts }) + "\n", (err) => {
        if (err) {
          this.pending.delete(id);
          reject(err);
        }
      });
    });
    return result.then((message) => {
      if (message.error !== undefined) {
        throw new Error(`model error: ${message.error}`);
      }
      if (!Array.isArray(message.texts) || message.texts.length !== texts.length) {
        throw new Error(
          `model returned ${message.texts?.length ?? "no"} texts for ${texts.length} inputs`
        );
      }
      return message.texts;
    });
  }

  /** Handshake proving the model loaded; rejects when the process is dead. */
  async ready(): Promise<void> {
    await this.enqueue([]);
  }

  private enqueue(texts: string[]): Promise<string[]> {
    const run = this.queue.then(() => this.roundTrip(texts));
    this.queue = run.catch(() => undefined); // keep the chain alive after failures
    return run;
  }

  async correctBatch(sentences: string[][]): Promise<string[][]> {
    if (sentences.length === 0) return [];
    const texts = sentences.map((tokens) => tokens.join(" "));
    const corrected = await this.enqueue(texts);
    return corrected.map((text) => text.split(/\s+/).filter((t) => t.length > 0));
  }

  async close(): Promise<void> {
    this.closed = true;
    this.lines.close();
    this.child.stdin.end();
    if (this.child.exitCode === null) {
      this.child.kill();
    }
  }
}
