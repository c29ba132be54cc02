// Thin typed client over the annotation service endpoints.

import type {
  AnnotationPayload,
  ExperimentStatus,
  PendingQuery,
  SubmitResult,
} from "./types.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AnnotationClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init)
  ) {}

  async pendingQueries(): Promise<PendingQuery[]> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/queries/pending`);
    if (!response.ok) {
      throw new Error(`pending queries failed: ${response.status}`);
    }
    const body = await response.json();
    return body.queries as PendingQuery[];
  }

  async submitAnnotation(queryId: string, payload: AnnotationPayload): Promise<SubmitResult> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/queries/${encodeURIComponent(queryId)}/annotation`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(payload),
      }
    );
    if (response.ok) {
      return { ok: true };
    }
    let reason = `http ${response.status}`;
    try {
      const body = await response.json();
      if (typeof body.detail === "string") reason = body.detail;
    } catch {
      // keep the generic reason when the body is not json
    }
    return { ok: false, status: response.status, reason };
  }

  async experimentStatus(): Promise<ExperimentStatus> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/experiment/status`);
    if (!response.ok) {
      throw new Error(`status failed: ${response.status}`);
    }
    return (await response.json()) as ExperimentStatus;
  }
}
