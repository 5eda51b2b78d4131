/** The server/UI contract, mirrored from data/api_schema.json.
 *
 * These constants must stay in lockstep with the JSON file shipped inside
 * the Python package; the schema-parity test reads that file and fails the
 * build when the two drift.
 */

import type { EntityTypeName } from "./types.js";

export const SCHEMA_VERSION = 1;

export const ENTITY_TYPES: EntityTypeName[] = [
  "Mobility",
  "Action",
  "Assistance",
  "Quantification",
  "ScoreDefinition",
];

export const IN_SCOPE_TYPES: EntityTypeName[] = [
  "Mobility",
  "Action",
  "Assistance",
  "Quantification",
];

export const PHASES = ["pretag", "blind", "gold"] as const;

export const TAG_SCHEME = ["O", "B", "I"] as const;

export const NESTING_PARENT: EntityTypeName = "Mobility";
export const NESTED_TYPES: EntityTypeName[] = ["Action", "Assistance", "Quantification"];
export const RELEVANT_TYPES: EntityTypeName[] = ["Action", "Mobility"];

export const ENDPOINTS = {
  nextBatch: "/api/batch/next",
  adjudicationNext: "/api/adjudication/next",
  submitBlind: "/api/annotations/blind",
  submitGold: "/api/annotations/gold",
  runIteration: "/api/iteration/run",
  metrics: "/api/metrics",
  sentence: "/api/sentence",
  schema: "/api/schema",
} as const;

/** Per-type display colors for the layered highlights and the legend. */
export const TYPE_COLORS: Record<EntityTypeName, string> = {
  Mobility: "#cde8ff",
  Action: "#ffd9a8",
  Assistance: "#c9f3c9",
  Quantification: "#eed5ff",
  ScoreDefinition: "#e8e8e8",
};
