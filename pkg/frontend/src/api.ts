/** Typed client for the annotation service; the workbench's only data path. */

import { ENDPOINTS } from "./schema.js";
import type {
  AdjudicationPayload,
  AnnotationRecord,
  BatchPayload,
  IterationRecordPayload,
  MetricsPayload,
  SubmitResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function parse<T>(response: Response): Promise<T> {
  const body = (await response.json()) as T & { error?: string };
  if (!response.ok) {
    throw new ApiError(response.status, body.error ?? `HTTP ${response.status}`);
  }
  return body;
}

export class AnnotationApi {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async nextBatch(annotatorId: string): Promise<BatchPayload> {
    const query = new URLSearchParams({ annotator_id: annotatorId });
    return parse(await fetch(this.url(`${ENDPOINTS.nextBatch}?${query}`)));
  }

  async adjudicationNext(annotatorId: string): Promise<AdjudicationPayload> {
    const query = new URLSearchParams({ annotator_id: annotatorId });
    return parse(await fetch(this.url(`${ENDPOINTS.adjudicationNext}?${query}`)));
  }

  private async submit(
    path: string,
    annotatorId: string,
    annotations: AnnotationRecord[],
  ): Promise<SubmitResponse> {
    return parse(
      await fetch(this.url(path), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ annotator_id: annotatorId, annotations }),
      }),
    );
  }

  submitBlind(annotatorId: string, annotations: AnnotationRecord[]): Promise<SubmitResponse> {
    return this.submit(ENDPOINTS.submitBlind, annotatorId, annotations);
  }

  submitGold(adjudicatorId: string, annotations: AnnotationRecord[]): Promise<SubmitResponse> {
    return this.submit(ENDPOINTS.submitGold, adjudicatorId, annotations);
  }

  async runIteration(): Promise<IterationRecordPayload> {
    return parse(
      await fetch(this.url(ENDPOINTS.runIteration), { method: "POST", body: "{}" }),
    );
  }

  async metrics(): Promise<MetricsPayload> {
    return parse(await fetch(this.url(ENDPOINTS.metrics)));
  }

  async sentence(sentenceId: string): Promise<Record<string, unknown>> {
    return parse(await fetch(this.url(`${ENDPOINTS.sentence}/${sentenceId}`)));
  }

  async schema(): Promise<Record<string, unknown>> {
    return parse(await fetch(this.url(ENDPOINTS.schema)));
  }
}
