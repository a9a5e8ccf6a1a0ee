/** Typed client for the session service. Every call goes through one fetch
 * wrapper so error handling, JSON decoding, and base-url joining live in a
 * single place. */

import type {
  HealthResponse,
  HistoryResponse,
  PointerPayload,
  RegistryResponse,
  TurnResponse,
  UploadResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** The one phrasing users see while a turn is still running elsewhere. */
export const BUSY_MESSAGE = "previous action still running";

export function friendlyMessage(err: unknown): string {
  if (err instanceof ApiError) {
    return err.status === 409 ? BUSY_MESSAGE : err.detail;
  }
  return err instanceof Error ? err.message : String(err);
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText || `status ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("/health");
  }

  registry(): Promise<RegistryResponse> {
    return this.request("/registry");
  }

  async createSession(): Promise<string> {
    const body = await this.request<{ session_id: string }>("/sessions", {
      method: "POST",
    });
    return body.session_id;
  }

  history(sessionId: string): Promise<HistoryResponse> {
    return this.request(`/sessions/${sessionId}/history`);
  }

  uploadArtifact(
    sessionId: string,
    file: { name: string; data: Blob },
    ocr?: string,
  ): Promise<UploadResponse> {
    const form = new FormData();
    form.append("file", file.data, file.name);
    if (ocr !== undefined) form.append("ocr", ocr);
    return this.request(`/sessions/${sessionId}/artifacts`, {
      method: "POST",
      body: form,
    });
  }

  pointerTurn(sessionId: string, payload: PointerPayload): Promise<TurnResponse> {
    return this.request(`/sessions/${sessionId}/pointer`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  chatTurn(sessionId: string, utterance: string): Promise<TurnResponse> {
    return this.request(`/sessions/${sessionId}/chat`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ utterance }),
    });
  }

  /** Stable URL for an artifact's bytes; usable as an <img> src. */
  artifactUrl(sessionId: string, ref: string): string {
    return `${this.base}/sessions/${sessionId}/artifacts/${ref}`;
  }

  async fetchArtifact(
    sessionId: string,
    ref: string,
  ): Promise<{ bytes: ArrayBuffer; kind: string }> {
    const response = await this.fetchImpl(this.artifactUrl(sessionId, ref));
    if (!response.ok) {
      throw new ApiError(response.status, response.statusText || "artifact fetch failed");
    }
    return {
      bytes: await response.arrayBuffer(),
      kind: response.headers.get("x-artifact-kind") ?? "",
    };
  }
}
