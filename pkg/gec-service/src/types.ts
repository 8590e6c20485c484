/**
 * Wire protocol types shared by the server and its tests.
 *
 *   GET  /health  -> { status: "ok", model: string }
 *   POST /correct { sentences: string[][] }
 *                 -> { corrections: string[][], model: string }
 *
 * corrections.length must always equal sentences.length.
 */

export interface CorrectRequest {
  sentences: string[][];
}

export interface CorrectResponse {
  corrections: string[][];
  model: string;
}

export interface HealthResponse {
  status: "ok";
  model: string;
}

export interface ErrorResponse {
  error: string;
}

export function isTokenList(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((t) => typeof t === "string");
}

export function parseCorrectRequest(body: unknown): CorrectRequest | null {
  if (typeof body !== "object" || body === null) return null;
  const sentences = (body as Record<string, unknown>).sentences;
  if (!Array.isArray(sentences) || !sentences.every(isTokenList)) return null;
  return { sentences: sentences as string[][] };
}
