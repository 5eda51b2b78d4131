import assert from "node:assert/strict";
import { test } from "node:test";

import { autoProposal, threeWayDiff } from "../src/diff.js";
import { layerSpans, nearestBoundary, segmentText } from "../src/render.js";
import { isTokenAligned, snapGuides, snapOutward } from "../src/snap.js";
import type { Span, Token } from "../src/types.js";

const TOKENS: Token[] = [[0, 2], [3, 12], [13, 15], [16, 20]];

test("snapOutward widens to covered tokens", () => {
  const snapped = snapOutward({ start: 4, end: 14, type: "Action" }, TOKENS);
  assert.deepEqual(snapped, { start: 3, end: 15, type: "Action" });
});

test("snapOutward returns null on whitespace", () => {
  assert.equal(snapOutward({ start: 2, end: 3, type: "Action" }, TOKENS), null);
});

test("alignment check and guides", () => {
  assert.ok(isTokenAligned({ start: 3, end: 12, type: "Action" }, TOKENS));
  assert.ok(!isTokenAligned({ start: 4, end: 12, type: "Action" }, TOKENS));
  assert.deepEqual(snapGuides(TOKENS), [0, 2, 3, 12, 13, 15, 16, 20]);
  assert.equal(nearestBoundary(11, TOKENS), 12);
});

test("nested spans get increasing depth", () => {
  const spans: Span[] = [
    { start: 0, end: 20, type: "Mobility" },
    { start: 3, end: 12, type: "Action" },
  ];
  const layers = layerSpans(spans);
  const mobility = layers.find((l) => l.span.type === "Mobility")!;
  const action = layers.find((l) => l.span.type === "Action")!;
  assert.equal(mobility.depth, 0);
  assert.equal(action.depth, 1);
});

test("segmentation covers the text exactly once", () => {
  const text = "Pt ambulated 50 feet";
  const spans: Span[] = [
    { start: 0, end: 20, type: "Mobility" },
    { start: 3, end: 12, type: "Action" },
    { start: 13, end: 20, type: "Quantification" },
  ];
  const segments = segmentText(text, spans);
  assert.equal(segments.map((s) => s.text).join(""), text);
  const inAction = segments.find((s) => s.start === 3)!;
  assert.deepEqual(
    inAction.layers.map((l) => l.span.type),
    ["Mobility", "Action"],
  );
});

test("empty span list renders one plain segment", () => {
  const segments = segmentText("plain text", []);
  assert.equal(segments.length, 1);
  assert.deepEqual(segments[0]!.layers, []);
});

test("three-way diff rows and auto proposal", () => {
  const shared: Span = { start: 0, end: 5, type: "Action" };
  const extra: Span = { start: 7, end: 9, type: "Quantification" };
  const a = [shared, extra];
  const b = [shared];

  assert.equal(autoProposal(a, b), null);
  assert.deepEqual(autoProposal(a, [extra, shared]), [shared, extra]);

  const rows = threeWayDiff(a, b, a);
  assert.equal(rows.length, 2);
  const disputed = rows.find((r) => !r.agreed)!;
  assert.deepEqual(disputed.span, extra);
  assert.ok(disputed.inA && !disputed.inB && disputed.inResolution);
});
