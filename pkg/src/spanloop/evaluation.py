"""Span-level scoring, inter-annotator agreement, and cross-validation.

Exact matching requires identical type and boundaries.  Partial matching
counts any same-type character overlap, matched one-to-one greedily by
descending overlap length; the tie-break key is symmetric in gold/pred so
swapping the two sides exchanges precision and recall exactly.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .annotations import (
    EntitySpan,
    EntityType,
    IN_SCOPE_TYPES,
    SentenceAnnotation,
    spans_to_bio,
)
from .corpus import Sentence

__all__ = [
    "PrfScore",
    "MATCH_MODES",
    "FoldAssignment",
    "EvaluationError",
    "span_f1",
    "micro_prf",
    "iaa_report",
    "iaa_csv",
    "stratified_kfold",
    "cross_validate",
    "cross_validation_csv",
]

MATCH_MODES = ("exact", "partial")


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class PrfScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: PrfScore) -> PrfScore:
        return PrfScore(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def _match_counts(gold: list[EntitySpan], pred: list[EntitySpan], mode: str) -> tuple[int, int, int]:
    if mode == "exact":
        g = Counter((s.start, s.end) for s in gold)
        p = Counter((s.start, s.end) for s in pred)
        tp = sum((g & p).values())
        return tp, len(pred) - tp, len(gold) - tp

    # partial: any overlap, greedy one-to-one by descending overlap length
    pairs = []
    for gi, gs in enumerate(gold):
        for pi, ps in enumerate(pred):
            overlap = min(gs.end, ps.end) - max(gs.start, ps.start)
            if overlap > 0:
                a, b = sorted([(gs.start, gs.end), (ps.start, ps.end)])
                pairs.append((-overlap, a, b, gi, pi))
    pairs.sort()
    used_g: set[int] = set()
    used_p: set[int] = set()
    tp = 0
    for _, _, _, gi, pi in pairs:
        if gi in used_g or pi in used_p:
            continue
        used_g.add(gi)
        used_p.add(pi)
        tp += 1
    return tp, len(pred) - tp, len(gold) - tp


def span_f1(
    gold: list[EntitySpan],
    pred: list[EntitySpan],
    etype: EntityType,
    mode: str = "exact",
) -> PrfScore:
    """Precision/recall/F1 for one entity type under one match mode."""
    if mode not in MATCH_MODES:
        raise EvaluationError(f"unknown match mode {mode!r}")
    g = [s for s in gold if s.etype == etype]
    p = [s for s in pred if s.etype == etype]
    tp, fp, fn = _match_counts(g, p, mode)
    return PrfScore(tp=tp, fp=fp, fn=fn)


def micro_prf(
    gold_by_sentence: dict[str, list[EntitySpan]],
    pred_by_sentence: dict[str, list[EntitySpan]],
    etype: EntityType,
    mode: str,
) -> PrfScore:
    """Micro-average: pool tp/fp/fn over a shared sentence set."""
    if set(gold_by_sentence) != set(pred_by_sentence):
        raise EvaluationError("sentence coverage differs between the two sides")
    total = PrfScore(0, 0, 0)
    for sid in gold_by_sentence:
        total = total + span_f1(gold_by_sentence[sid], pred_by_sentence[sid], etype, mode)
    return total


IAA_PAIRS = ("A vs B", "A vs Gold", "B vs Gold")


def iaa_report(
    blind_a: dict[str, SentenceAnnotation],
    blind_b: dict[str, SentenceAnnotation],
    gold: dict[str, SentenceAnnotation],
    etypes: tuple[EntityType, ...] = IN_SCOPE_TYPES,
) -> dict[tuple[str, EntityType, str], PrfScore]:
    """Agreement table: (pair, entity type, mode) -> micro PrfScore.

    All three annotation sets must cover the same sentences.  In each pair
    the second member is treated as reference.
    """
    cover = {frozenset(blind_a), frozenset(blind_b), frozenset(gold)}
    if len(cover) != 1:
        raise EvaluationError("blind_a, blind_b, and gold must cover the same sentences")
    spans = {
        "A": {sid: ann.spans for sid, ann in blind_a.items()},
        "B": {sid: ann.spans for sid, ann in blind_b.items()},
        "Gold": {sid: ann.spans for sid, ann in gold.items()},
    }
    table: dict[tuple[str, EntityType, str], PrfScore] = {}
    for pair, (lhs, rhs) in zip(IAA_PAIRS, (("A", "B"), ("A", "Gold"), ("B", "Gold"))):
        for etype in etypes:
            for mode in MATCH_MODES:
                table[(pair, etype, mode)] = micro_prf(spans[rhs], spans[lhs], etype, mode)
    return table


def iaa_csv(table: dict[tuple[str, EntityType, str], PrfScore], path: str | Path,
            etypes: tuple[EntityType, ...] = IN_SCOPE_TYPES) -> None:
    """Write the agreement table as CSV: one row per pair, E/P columns per type."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        header = ["pair"]
        for etype in etypes:
            header += [f"{etype.value}_E", f"{etype.value}_P"]
        writer.writerow(header)
        for pair in IAA_PAIRS:
            row = [pair]
            for etype in etypes:
                row += [
                    f"{table[(pair, etype, 'exact')].f1:.4f}",
                    f"{table[(pair, etype, 'partial')].f1:.4f}",
                ]
            writer.writerow(row)


@dataclass
class FoldAssignment:
    """A partition of sentence ids into k folds with per-type entity counts."""

    folds: list[list[str]]
    type_counts: list[dict[EntityType, int]]

    @property
    def k(self) -> int:
        return len(self.folds)

    def spread(self, etype: EntityType) -> int:
        counts = [c.get(etype, 0) for c in self.type_counts]
        return max(counts) - min(counts)


def stratified_kfold(
    dataset: list[tuple[Sentence, SentenceAnnotation]],
    k: int,
    seed: int = 13,
    etypes: tuple[EntityType, ...] = IN_SCOPE_TYPES,
) -> FoldAssignment:
    """Greedy balanced folds: like entity counts per type in every fold.

    Sentences are shuffled with the seed, stably sorted so rare-type content
    goes first, then each is assigned to the fold least loaded in its rarest
    contained type (ties: next types, fold size, fold index).
    """
    if k < 2:
        raise EvaluationError("k must be >= 2")
    if len(dataset) < k:
        raise EvaluationError(f"dataset of {len(dataset)} sentences cannot fill {k} folds")

    totals = {e: 0 for e in etypes}
    per_sentence = []
    for sentence, ann in dataset:
        counts = {e: sum(1 for s in ann.spans if s.etype == e) for e in etypes}
        per_sentence.append((sentence.sentence_id, counts))
        for e in etypes:
            totals[e] += counts[e]
    rarity = sorted(etypes, key=lambda e: (totals[e], e.value))

    rng = np.random.default_rng(seed)
    order = list(rng.permutation(len(per_sentence)))
    # rare-type content first: key = counts in rarity order, descending
    order.sort(key=lambda i: tuple(-per_sentence[i][1][e] for e in rarity))

    folds: list[list[str]] = [[] for _ in range(k)]
    loads = [{e: 0 for e in etypes} for _ in range(k)]
    for i in order:
        sid, counts = per_sentence[i]
        present = [e for e in rarity if counts[e] > 0]
        best = min(
            range(k),
            key=lambda f: (
                tuple(loads[f][e] for e in present),
                len(folds[f]),
                f,
            ),
        )
        folds[best].append(sid)
        for e in etypes:
            loads[best][e] += counts[e]
    return FoldAssignment(folds=folds, type_counts=loads)


def cross_validate(
    dataset: list[tuple[Sentence, SentenceAnnotation]],
    kind: str,
    k: int = 5,
    config=None,
    etypes: tuple[EntityType, ...] = IN_SCOPE_TYPES,
    seed: int = 13,
) -> dict[EntityType, list[PrfScore]]:
    """k-fold cross-validation of one tagger kind, per entity type.

    Returns the per-fold exact-match scores (position f = fold f held out);
    the headline number is the mean F1 across folds.
    """
    from .annotations import bio_to_spans
    from .taggers import predict_tags, train_tagger  # deferred: avoids cycle

    assignment = stratified_kfold(dataset, k=k, seed=seed, etypes=etypes)
    by_id = {s.sentence_id: (s, ann) for s, ann in dataset}
    results: dict[EntityType, list[PrfScore]] = {e: [] for e in etypes}
    for f in range(k):
        train_set = [
            by_id[sid]
            for g, fold in enumerate(assignment.folds)
            if g != f
            for sid in fold
        ]
        held = [by_id[sid] for sid in assignment.folds[f]]
        for etype in etypes:
            labeled = [(s, spans_to_bio(s, ann, etype)) for s, ann in train_set]
            model = train_tagger(kind, etype, labeled, config=config)
            gold_spans = {s.sentence_id: ann.spans_of(etype) for s, ann in held}
            pred = predict_tags(model, [s for s, _ in held])
            pred_spans = {
                s.sentence_id: bio_to_spans(s, bio) for (s, _), bio in zip(held, pred)
            }
            results[etype].append(micro_prf(gold_spans, pred_spans, etype, "exact"))
    return results


def cross_validation_csv(
    results: dict[EntityType, list[PrfScore]], path: str | Path
) -> None:
    """Per-type mean F1 plus the per-fold table."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        etypes = list(results)
        writer.writerow(["fold"] + [e.value for e in etypes])
        n_folds = len(next(iter(results.values())))
        for fold in range(n_folds):
            writer.writerow(
                [str(fold)] + [f"{results[e][fold].f1:.4f}" for e in etypes]
            )
        writer.writerow(
            ["mean"]
            + [f"{np.mean([s.f1 for s in results[e]]):.4f}" for e in etypes]
        )
