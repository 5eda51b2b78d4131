/** Editing state for one batch: span buffers, undo stacks, dirty flags.
 *
 * Every mutation goes through snapping and leaves the buffer serializable
 * as a valid standoff record (or carrying its lint inline); the server
 * never sees anything the local validator has not already judged.
 */

import { validateSpans } from "./lint.js";
import { snapOutward } from "./snap.js";
import type {
  AnnotationRecord,
  BatchSentence,
  EntityTypeName,
  LintFinding,
  Phase,
  Span,
} from "./types.js";
import { sameSpanSet, sortSpans } from "./types.js";

export type EditAction =
  | { kind: "create"; start: number; end: number; type: EntityTypeName }
  | { kind: "resize"; index: number; start: number; end: number }
  | { kind: "retype"; index: number; type: EntityTypeName }
  | { kind: "delete"; index: number };

export class EditorError extends Error {}

interface SentenceBuffer {
  sentence: BatchSentence;
  spans: Span[];
  undo: Span[][];
  dirty: boolean;
}

export class EditorState {
  readonly phase: Phase;
  private buffers = new Map<string, SentenceBuffer>();
  selectionAnchor: { sentenceId: string; start: number; end: number } | null = null;

  constructor(sentences: BatchSentence[], phase: Phase = "blind") {
    this.phase = phase;
    for (const sentence of sentences) {
      this.buffers.set(sentence.sentence_id, {
        sentence,
        spans: sortSpans(sentence.spans),
        undo: [],
        dirty: false,
      });
    }
  }

  sentenceIds(): string[] {
    return [...this.buffers.keys()];
  }

  private buffer(sentenceId: string): SentenceBuffer {
    const buf = this.buffers.get(sentenceId);
    if (!buf) {
      throw new EditorError(`unknown sentence ${sentenceId}`);
    }
    return buf;
  }

  spans(sentenceId: string): Span[] {
    return [...this.buffer(sentenceId).spans];
  }

  isDirty(sentenceId: string): boolean {
    return this.buffer(sentenceId).dirty;
  }

  lint(sentenceId: string): LintFinding[] {
    const buf = this.buffer(sentenceId);
    return validateSpans(buf.sentence.text.length, buf.sentence.tokens, buf.spans);
  }

  /** Apply one edit; spans snap outward to token boundaries on commit. */
  edit(sentenceId: string, action: EditAction): { snapped: boolean } {
    const buf = this.buffer(sentenceId);
    const before = buf.spans.map((s) => ({ ...s }));
    let snapped = false;

    const snapOrThrow = (candidate: Span): Span => {
      const result = snapOutward(candidate, buf.sentence.tokens);
      if (result === null) {
        throw new EditorError(
          `span (${candidate.start},${candidate.end}) covers no token`,
        );
      }
      snapped = result.start !== candidate.start || result.end !== candidate.end;
      return result;
    };

    switch (action.kind) {
      case "create": {
        const span = snapOrThrow({ start: action.start, end: action.end, type: action.type });
        buf.spans = sortSpans([...buf.spans, span]);
        break;
      }
      case "resize": {
        const target = buf.spans[action.index];
        if (!target) {
          throw new EditorError(`no span at index ${action.index}`);
        }
        const span = snapOrThrow({ start: action.start, end: action.end, type: target.type });
        const next = buf.spans.map((s) => ({ ...s }));
        next[action.index] = span;
        buf.spans = sortSpans(next);
        break;
      }
      case "retype": {
        const target = buf.spans[action.index];
        if (!target) {
          throw new EditorError(`no span at index ${action.index}`);
        }
        const next = buf.spans.map((s) => ({ ...s }));
        next[action.index] = { ...target, type: action.type };
        buf.spans = sortSpans(next);
        break;
      }
      case "delete": {
        if (!buf.spans[action.index]) {
          throw new EditorError(`no span at index ${action.index}`);
        }
        buf.spans = buf.spans.filter((_, i) => i !== action.index);
        break;
      }
    }

    buf.undo.push(before);
    buf.dirty = !sameSpanSet(buf.spans, buf.sentence.spans);
    return { snapped };
  }

  undo(sentenceId: string): boolean {
    const buf = this.buffer(sentenceId);
    const previous = buf.undo.pop();
    if (!previous) {
      return false;
    }
    buf.spans = previous;
    buf.dirty = !sameSpanSet(buf.spans, buf.sentence.spans);
    return true;
  }

  /** Standoff records for submission; sorted exactly like the server sorts. */
  serialize(onlyDirty = false): AnnotationRecord[] {
    const records: AnnotationRecord[] = [];
    for (const buf of this.buffers.values()) {
      if (onlyDirty && !buf.dirty) {
        continue;
      }
      records.push({
        sentence_id: buf.sentence.sentence_id,
        spans: sortSpans(buf.spans).map((s) => ({ start: s.start, end: s.end, type: s.type })),
      });
    }
    return records;
  }

  /** Records currently failing the local lint with a blocking error. */
  blocked(): { sentenceId: string; findings: LintFinding[] }[] {
    const out = [];
    for (const sentenceId of this.sentenceIds()) {
      const findings = this.lint(sentenceId).filter((f) => f.severity === "error");
      if (findings.length) {
        out.push({ sentenceId, findings });
      }
    }
    return out;
  }
}
