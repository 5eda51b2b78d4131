/** Local annotation lint: a faithful replica of the server's validator.
 *
 * The workbench previews verdicts before submitting, so this must agree
 * with the server rule for rule — the shared fixture parity test holds the
 * two implementations together, down to message strings and finding order.
 */

import { NESTED_TYPES, NESTING_PARENT, RELEVANT_TYPES } from "./schema.js";
import type { EntityTypeName, LintFinding, Span, Token } from "./types.js";
import { isTokenAligned } from "./snap.js";
import { sortSpans } from "./types.js";

export function validateSpans(
  textLength: number,
  tokens: Token[],
  spans: Span[],
): LintFinding[] {
  const findings: LintFinding[] = [];
  const inRange: Span[] = [];

  for (const span of sortSpans(spans)) {
    if (!(0 <= span.start && span.start < span.end && span.end <= textLength)) {
      findings.push({
        code: "OFFSET",
        severity: "error",
        message: `span (${span.start},${span.end}) outside [0,${textLength})`,
      });
      continue;
    }
    inRange.push(span);
    if (!isTokenAligned(span, tokens)) {
      findings.push({
        code: "OFFSET",
        severity: "warning",
        message: `span (${span.start},${span.end}) not token-aligned; will be snapped`,
      });
    }
  }

  const byType = new Map<EntityTypeName, Span[]>();
  for (const span of inRange) {
    const bucket = byType.get(span.type);
    if (bucket) {
      bucket.push(span);
    } else {
      byType.set(span.type, [span]);
    }
  }

  for (const [etype, typed] of byType) {
    for (let i = 0; i + 1 < typed.length; i++) {
      const a = typed[i]!;
      const b = typed[i + 1]!;
      if (b.start < a.end) {
        findings.push({
          code: "OVERLAP_SAME_TYPE",
          severity: "error",
          message: `${etype} spans (${a.start},${a.end}) and (${b.start},${b.end}) overlap`,
        });
      }
    }
  }

  const mobility = byType.get(NESTING_PARENT) ?? [];
  for (const etype of NESTED_TYPES) {
    for (const span of byType.get(etype) ?? []) {
      const nested = mobility.some((m) => m.start <= span.start && span.end <= m.end);
      if (!nested) {
        findings.push({
          code: "NESTING",
          severity: "warning",
          message: `${etype} span (${span.start},${span.end}) not inside any Mobility span`,
        });
      }
    }
  }

  const hasRelevant = RELEVANT_TYPES.some((t) => (byType.get(t) ?? []).length > 0);
  if (!hasRelevant) {
    findings.push({
      code: "EMPTY_RELEVANT",
      severity: "warning",
      message: "no Action and no Mobility span",
    });
  }
  return findings;
}

export function hasBlockingLint(findings: LintFinding[]): boolean {
  return findings.some((f) => f.severity === "error");
}
