/** Pure layout for layered nested highlights.
 *
 * Spans become depth-stacked layers (outermost first), and the text splits
 * into segments carrying the set of layers covering them; the DOM side just
 * paints segments.  Kept DOM-free so tests can pin the geometry.
 */

import type { Span, Token } from "./types.js";
import { sortSpans } from "./types.js";

export interface HighlightLayer {
  span: Span;
  depth: number; // number of strictly containing spans
}

export interface TextSegment {
  start: number;
  end: number;
  text: string;
  layers: HighlightLayer[]; // outermost first
}

export function layerSpans(spans: Span[]): HighlightLayer[] {
  const sorted = sortSpans(spans);
  return sorted.map((span) => {
    const depth = sorted.filter(
      (other) =>
        other !== span &&
        other.start <= span.start &&
        span.end <= other.end &&
        (other.end - other.start) > (span.end - span.start),
    ).length;
    return { span, depth };
  });
}

export function segmentText(text: string, spans: Span[]): TextSegment[] {
  const layers = layerSpans(spans);
  const cuts = new Set<number>([0, text.length]);
  for (const { span } of layers) {
    cuts.add(Math.max(0, span.start));
    cuts.add(Math.min(text.length, span.end));
  }
  const marks = [...cuts].sort((a, b) => a - b);
  const segments: TextSegment[] = [];
  for (let i = 0; i + 1 < marks.length; i++) {
    const start = marks[i]!;
    const end = marks[i + 1]!;
    if (end <= start) {
      continue;
    }
    const active = layers
      .filter(({ span }) => span.start <= start && end <= span.end)
      .sort((a, b) => a.depth - b.depth);
    segments.push({ start, end, text: text.slice(start, end), layers: active });
  }
  return segments;
}

/** Character offset of the nearest token boundary, for drag snap guides. */
export function nearestBoundary(position: number, tokens: Token[]): number {
  let best = 0;
  let bestDist = Infinity;
  for (const [s, e] of tokens) {
    for (const mark of [s, e]) {
      const dist = Math.abs(mark - position);
      if (dist < bestDist) {
        best = mark;
        bestDist = dist;
      }
    }
  }
  return best;
}
