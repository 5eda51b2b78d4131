"""Nested-span annotation model, BIO projections, validation, adjudication.

Nesting is handled by independent per-type BIO projections: each entity type
gets its own three-tag sequence over the sentence's tokens, so editing one
type's spans never disturbs another type's projection.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

from .corpus import Sentence

__all__ = [
    "EntityType",
    "IN_SCOPE_TYPES",
    "TAGS",
    "PHASES",
    "EntitySpan",
    "SentenceAnnotation",
    "BioTagSequence",
    "AnnotationBatch",
    "Finding",
    "SpanDiff",
    "AnnotationError",
    "snap_span",
    "spans_to_bio",
    "bio_to_spans",
    "validate_annotation",
    "adjudicate",
    "conll_lines",
]


class EntityType(str, Enum):
    MOBILITY = "Mobility"
    ACTION = "Action"
    ASSISTANCE = "Assistance"
    QUANTIFICATION = "Quantification"
    SCORE_DEFINITION = "ScoreDefinition"


# ScoreDefinition stays in the data model but is excluded from training and
# evaluation defaults.
IN_SCOPE_TYPES = (
    EntityType.MOBILITY,
    EntityType.ACTION,
    EntityType.ASSISTANCE,
    EntityType.QUANTIFICATION,
)

# Fixed tag order; ties in decoding resolve toward the earlier tag.
TAGS = ("O", "B", "I")

PHASES = ("pretag", "blind", "gold")


class AnnotationError(Exception):
    pass


@dataclass(frozen=True, order=True)
class EntitySpan:
    """Typed half-open character span into a sentence's text."""

    start: int
    end: int
    etype: EntityType

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end, "type": self.etype.value}

    @classmethod
    def from_json(cls, obj: dict) -> EntitySpan:
        return cls(start=int(obj["start"]), end=int(obj["end"]), etype=EntityType(obj["type"]))


@dataclass
class SentenceAnnotation:
    """All spans one annotator committed for one sentence in one phase."""

    sentence_id: str
    spans: list[EntitySpan]
    annotator: str
    phase: str = "blind"

    def spans_of(self, etype: EntityType) -> list[EntitySpan]:
        return sorted(s for s in self.spans if s.etype == etype)

    def to_json(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "phase": self.phase,
            "annotator": self.annotator,
            "spans": [s.to_json() for s in sorted(self.spans)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> SentenceAnnotation:
        return cls(
            sentence_id=obj["sentence_id"],
            spans=[EntitySpan.from_json(s) for s in obj.get("spans", [])],
            annotator=obj.get("annotator", ""),
            phase=obj.get("phase", "blind"),
        )


@dataclass
class BioTagSequence:
    """Per-type token tags from the scheme [O, B, I]; one per sentence token."""

    etype: EntityType
    tags: list[str]

    def __post_init__(self):
        bad = [t for t in self.tags if t not in TAGS]
        if bad:
            raise AnnotationError(f"unknown tags {bad!r}")

    def is_valid(self) -> bool:
        prev = "O"
        for t in self.tags:
            if t == "I" and prev == "O":
                return False
            prev = t
        return True


@dataclass
class AnnotationBatch:
    """One iteration's worth of sentences to annotate, with split hints.

    Default sizing follows the weekly protocol: 125 sentences per batch,
    the first 100 hinted to train and the remainder to validation.
    """

    iteration: int
    sentence_ids: list[str]
    split_hint: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_selection(cls, iteration: int, sentence_ids: list[str], train_count: int = 100) -> AnnotationBatch:
        hints = {
            sid: ("train" if i < train_count else "validation")
            for i, sid in enumerate(sentence_ids)
        }
        return cls(iteration=iteration, sentence_ids=list(sentence_ids), split_hint=hints)

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "sentence_ids": self.sentence_ids,
            "split_hint": self.split_hint,
        }

    @classmethod
    def from_json(cls, obj: dict) -> AnnotationBatch:
        return cls(
            iteration=int(obj["iteration"]),
            sentence_ids=list(obj["sentence_ids"]),
            split_hint=dict(obj.get("split_hint", {})),
        )


def snap_span(sentence: Sentence, span: EntitySpan) -> EntitySpan:
    """Snap a span outward to token boundaries.

    The snapped span covers every token the original overlaps.  Raises when
    the span overlaps no token at all (whitespace-only selection).
    """
    covered = [(ts, te) for ts, te in sentence.tokens if ts < span.end and te > span.start]
    if not covered:
        raise AnnotationError(
            f"span ({span.start},{span.end}) overlaps no token of sentence {sentence.sentence_id}"
        )
    return EntitySpan(start=covered[0][0], end=covered[-1][1], etype=span.etype)


def spans_to_bio(sentence: Sentence, ann: SentenceAnnotation, etype: EntityType) -> BioTagSequence:
    """Project one entity type's spans onto the token sequence as B/I/O tags."""
    tags = ["O"] * len(sentence.tokens)
    for span in ann.spans_of(etype):
        snapped = snap_span(sentence, span)
        first = True
        for i, (ts, te) in enumerate(sentence.tokens):
            if ts >= snapped.start and te <= snapped.end:
                if tags[i] != "O":
                    raise AnnotationError(
                        f"overlapping {etype.value} spans in sentence {sentence.sentence_id}"
                    )
                tags[i] = "B" if first else "I"
                first = False
    return BioTagSequence(etype=etype, tags=tags)


def bio_to_spans(sentence: Sentence, bio: BioTagSequence) -> list[EntitySpan]:
    """Recover character spans from a BIO projection.

    Maximal B I* runs become spans.  An I with no open run (invalid BIO) is
    repaired to B with a warning, matching common CoNLL practice.
    """
    if len(bio.tags) != len(sentence.tokens):
        raise AnnotationError(
            f"tag count {len(bio.tags)} != token count {len(sentence.tokens)}"
        )
    spans: list[EntitySpan] = []
    run_start: int | None = None
    run_end = 0
    for tag, (ts, te) in zip(bio.tags, sentence.tokens):
        if tag == "I" and run_start is None:
            warnings.warn("I tag without a preceding B; repaired to B")
            tag = "B"
        if tag == "B":
            if run_start is not None:
                spans.append(EntitySpan(start=run_start, end=run_end, etype=bio.etype))
            run_start, run_end = ts, te
        elif tag == "I":
            run_end = te
        else:
            if run_start is not None:
                spans.append(EntitySpan(start=run_start, end=run_end, etype=bio.etype))
                run_start = None
    if run_start is not None:
        spans.append(EntitySpan(start=run_start, end=run_end, etype=bio.etype))
    return spans


@dataclass(frozen=True)
class Finding:
    """One lint result from validate_annotation."""

    code: str  # NESTING | EMPTY_RELEVANT | OVERLAP_SAME_TYPE | OFFSET
    message: str
    severity: str  # "error" | "warning"

    @property
    def is_error(self) -> bool:
        return self.severity == "error"


def _token_aligned(sentence: Sentence, pos: int, side: str) -> bool:
    edges = {ts for ts, _ in sentence.tokens} if side == "start" else {te for _, te in sentence.tokens}
    return pos in edges


def validate_annotation(sentence: Sentence, ann: SentenceAnnotation) -> list[Finding]:
    """Lint one annotation.  Pure: identical input yields identical findings.

    OVERLAP_SAME_TYPE and out-of-range OFFSET are hard errors that block a
    gold commit; NESTING, EMPTY_RELEVANT, and unaligned OFFSET are warnings
    (boundaries get snapped outward on projection anyway).
    """
    findings: list[Finding] = []
    n = len(sentence.text)
    in_range: list[EntitySpan] = []
    for span in sorted(ann.spans):
        if not (0 <= span.start < span.end <= n):
            findings.append(
                Finding(
                    code="OFFSET",
                    message=f"span ({span.start},{span.end}) outside [0,{n})",
                    severity="error",
                )
            )
            continue
        in_range.append(span)
        if not (_token_aligned(sentence, span.start, "start") and _token_aligned(sentence, span.end, "end")):
            findings.append(
                Finding(
                    code="OFFSET",
                    message=f"span ({span.start},{span.end}) not token-aligned; will be snapped",
                    severity="warning",
                )
            )

    by_type: dict[EntityType, list[EntitySpan]] = {}
    for span in in_range:
        by_type.setdefault(span.etype, []).append(span)

    for etype, spans in by_type.items():
        for a, b in zip(spans, spans[1:]):
            if b.start < a.end:
                findings.append(
                    Finding(
                        code="OVERLAP_SAME_TYPE",
                        message=f"{etype.value} spans ({a.start},{a.end}) and ({b.start},{b.end}) overlap",
                        severity="error",
                    )
                )

    mobility = by_type.get(EntityType.MOBILITY, [])
    for etype in (EntityType.ACTION, EntityType.ASSISTANCE, EntityType.QUANTIFICATION):
        for span in by_type.get(etype, []):
            if not any(m.start <= span.start and span.end <= m.end for m in mobility):
                findings.append(
                    Finding(
                        code="NESTING",
                        message=f"{etype.value} span ({span.start},{span.end}) not inside any Mobility span",
                        severity="warning",
                    )
                )

    if not by_type.get(EntityType.ACTION) and not mobility:
        findings.append(
            Finding(
                code="EMPTY_RELEVANT",
                message="no Action and no Mobility span",
                severity="warning",
            )
        )
    return findings


@dataclass(frozen=True)
class SpanDiff:
    """Presence of one span across the two blind passes and the gold record."""

    span: EntitySpan
    in_a: bool
    in_b: bool
    in_gold: bool


def adjudicate(
    sentence: Sentence,
    blind_a: SentenceAnnotation,
    blind_b: SentenceAnnotation,
    resolution: SentenceAnnotation,
) -> tuple[SentenceAnnotation, list[SpanDiff]]:
    """Commit a gold record from two blind passes plus a joint resolution.

    Returns the resolution stamped phase=gold together with the per-span
    disagreement log (spans absent from at least one of a, b, gold).  When
    the blind passes already agree, the resolution must match them.
    """
    ids = {blind_a.sentence_id, blind_b.sentence_id, resolution.sentence_id}
    if ids != {sentence.sentence_id}:
        raise AnnotationError(f"sentence_id mismatch: {ids}")
    hard = [f for f in validate_annotation(sentence, resolution) if f.is_error]
    if hard:
        raise AnnotationError(f"resolution has hard lint errors: {[f.message for f in hard]}")

    set_a, set_b, set_g = set(blind_a.spans), set(blind_b.spans), set(resolution.spans)
    if set_a == set_b and set_g != set_a:
        raise AnnotationError("blind passes agree; resolution must match them")

    diff = [
        SpanDiff(span=s, in_a=s in set_a, in_b=s in set_b, in_gold=s in set_g)
        for s in sorted(set_a | set_b | set_g)
        if not (s in set_a and s in set_b and s in set_g)
    ]
    gold = SentenceAnnotation(
        sentence_id=resolution.sentence_id,
        spans=sorted(resolution.spans),
        annotator=resolution.annotator,
        phase="gold",
    )
    return gold, diff


def conll_lines(
    sentence: Sentence,
    ann: SentenceAnnotation,
    etypes: tuple[EntityType, ...] = IN_SCOPE_TYPES,
) -> list[str]:
    """One token per line; one tag column per entity type, tab-separated."""
    columns = []
    for etype in etypes:
        bio = spans_to_bio(sentence, ann, etype)
        columns.append(
            [t if t == "O" else f"{t}-{etype.value}" for t in bio.tags]
        )
    lines = []
    for i, tok in enumerate(sentence.token_strings()):
        lines.append("\t".join([tok] + [col[i] for col in columns]))
    return lines
