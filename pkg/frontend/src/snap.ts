/** Token snapping: spans are character-based but commit on token boundaries. */

import type { Span, Token } from "./types.js";

/** Widen a span to cover every token it overlaps; null if it touches none. */
export function snapOutward(span: Span, tokens: Token[]): Span | null {
  const covered = tokens.filter(([ts, te]) => ts < span.end && te > span.start);
  if (covered.length === 0) {
    return null;
  }
  const first = covered[0]!;
  const last = covered[covered.length - 1]!;
  return { start: first[0], end: last[1], type: span.type };
}

export function isTokenAligned(span: Span, tokens: Token[]): boolean {
  const starts = new Set(tokens.map(([s]) => s));
  const ends = new Set(tokens.map(([, e]) => e));
  return starts.has(span.start) && ends.has(span.end);
}

/** Token boundary positions, used by the editor as snap guides. */
export function snapGuides(tokens: Token[]): number[] {
  const marks = new Set<number>();
  for (const [s, e] of tokens) {
    marks.add(s);
    marks.add(e);
  }
  return [...marks].sort((a, b) => a - b);
}
