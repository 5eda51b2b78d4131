/** Three-way adjudication diff: blind A, blind B, and the working resolution. */

import type { Span } from "./types.js";
import { sameSpanSet, sortSpans, spansToJson } from "./types.js";

export interface DiffRow {
  span: Span;
  inA: boolean;
  inB: boolean;
  inResolution: boolean;
  agreed: boolean;
}

function key(span: Span): string {
  return `${span.start}:${span.end}:${span.type}`;
}

export function threeWayDiff(a: Span[], b: Span[], resolution: Span[]): DiffRow[] {
  const setA = new Set(a.map(key));
  const setB = new Set(b.map(key));
  const setR = new Set(resolution.map(key));
  const seen = new Set<string>();
  const rows: DiffRow[] = [];
  for (const span of sortSpans([...a, ...b, ...resolution])) {
    const k = key(span);
    if (seen.has(k)) {
      continue;
    }
    seen.add(k);
    const inA = setA.has(k);
    const inB = setB.has(k);
    rows.push({
      span,
      inA,
      inB,
      inResolution: setR.has(k),
      agreed: inA && inB,
    });
  }
  return rows;
}

/** The server proposes A when the blind passes agree; mirror that locally. */
export function autoProposal(a: Span[], b: Span[]): Span[] | null {
  return sameSpanSet(a, b) ? sortSpans(a) : null;
}

export function disagreementCount(a: Span[], b: Span[]): number {
  return threeWayDiff(a, b, []).filter((row) => !row.agreed).length;
}

export { spansToJson };
