/** Typed client for the triage service. All state lives server-side;
 * this module only shuttles JSON. The fetch implementation is injectable
 * so tests can serve canned responses. */

import type {
  AnalysisBody,
  CatalogFeature,
  EmailDetail,
  EmailSummary,
  ErrorEnvelope,
  InProgress,
  Thread,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx response, carrying the service's error envelope when the
 * body had one. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly stage: string;

  constructor(status: number, envelope: Partial<ErrorEnvelope>) {
    super(envelope.message ?? `request failed with status ${status}`);
    this.status = status;
    this.code = envelope.code ?? "unknown";
    this.stage = envelope.stage ?? "unknown";
  }
}

async function toError(response: Response): Promise<ApiError> {
  let envelope: Partial<ErrorEnvelope> = {};
  try {
    envelope = await response.json();
  } catch {
    // non-JSON error body; the status code still tells the story
  }
  return new ApiError(response.status, envelope);
}

export class CyriClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    const impl = fetchImpl ?? globalThis.fetch;
    if (!impl) throw new Error("no fetch implementation available");
    this.fetchImpl = impl.bind(globalThis) as FetchLike;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) throw await toError(response);
    return (await response.json()) as T;
  }

  listEmails(date?: string): Promise<{ emails: EmailSummary[] }> {
    const suffix = date ? `?date=${encodeURIComponent(date)}` : "";
    return this.request(`/emails${suffix}`);
  }

  getEmail(id: string): Promise<EmailDetail> {
    return this.request(`/emails/${encodeURIComponent(id)}`);
  }

  /** 202 while an analysis is in flight comes back as InProgress. */
  getAnalysis(id: string): Promise<AnalysisBody | InProgress> {
    return this.request(`/emails/${encodeURIComponent(id)}/analysis`);
  }

  analyze(
    id: string,
    options?: { force?: boolean; excluded_features?: string[] },
  ): Promise<AnalysisBody | InProgress> {
    const path = options?.force ? "reanalyze" : "analyze";
    return this.request(`/emails/${encodeURIComponent(id)}/${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        excluded_features: options?.excluded_features ?? [],
      }),
    });
  }

  query(id: string, text: string): Promise<{ reply: string; thread: Thread }> {
    return this.request(`/emails/${encodeURIComponent(id)}/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  getThread(id: string): Promise<{ thread: Thread }> {
    return this.request(`/emails/${encodeURIComponent(id)}/thread`);
  }

  getCatalog(): Promise<{ features: CatalogFeature[] }> {
    return this.request("/catalog");
  }
}
