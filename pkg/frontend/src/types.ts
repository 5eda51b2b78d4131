/** Wire types, matching the field names pinned in the shared API schema. */

export type EntityTypeName =
  | "Mobility"
  | "Action"
  | "Assistance"
  | "Quantification"
  | "ScoreDefinition";

export type Phase = "pretag" | "blind" | "gold";

export interface Span {
  start: number;
  end: number;
  type: EntityTypeName;
}

export interface AnnotationRecord {
  sentence_id: string;
  phase?: Phase;
  annotator?: string;
  spans: Span[];
}

/** Token boundaries as half-open [start, end) character intervals. */
export type Token = [number, number];

export interface BatchSentence {
  sentence_id: string;
  text: string;
  tokens: Token[];
  spans: Span[];
  lints: LintFinding[];
  split_hint: "train" | "validation";
}

export interface BatchPayload {
  iteration: number;
  sentences: BatchSentence[];
}

export interface AdjudicationItem {
  sentence_id: string;
  text: string;
  tokens: Token[];
  blind: Record<string, Span[]>;
  proposal: Span[] | null;
}

export interface AdjudicationPayload {
  iteration: number;
  sentences: AdjudicationItem[];
}

export interface LintFinding {
  code: string;
  severity: "error" | "warning";
  message: string;
}

export interface SubmitResponse {
  accepted: number;
  rejected: { sentence_id: string; reason: string }[];
  batch_closeable?: boolean;
}

export interface IterationRecordPayload {
  iteration: number;
  selected: string[];
  validation_f1: Record<string, number>;
  labeled_count: number;
  unlabeled_count: number;
  status?: string;
}

export interface MetricsPayload {
  iterations: IterationRecordPayload[];
  entity_counts: Record<string, number>;
}

export function sortSpans(spans: Span[]): Span[] {
  return [...spans].sort(
    (a, b) => a.start - b.start || a.end - b.end || (a.type < b.type ? -1 : a.type > b.type ? 1 : 0),
  );
}

/** Canonical JSON for a span list; the server emits keys in this order too. */
export function spansToJson(spans: Span[]): string {
  return JSON.stringify(
    sortSpans(spans).map((s) => ({ start: s.start, end: s.end, type: s.type })),
  );
}

export function sameSpanSet(a: Span[], b: Span[]): boolean {
  return spansToJson(a) === spansToJson(b);
}
