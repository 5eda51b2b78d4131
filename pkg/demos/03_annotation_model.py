"""Nested spans, per-type BIO projections, lint, and adjudication.

One sentence annotated with all four nested types, projected to BIO per
type, deliberately broken to show the validator, then adjudicated from two
blind passes to a gold record.
"""

from spanloop.annotations import (
    EntitySpan,
    EntityType,
    SentenceAnnotation,
    adjudicate,
    bio_to_spans,
    conll_lines,
    spans_to_bio,
    validate_annotation,
)
from spanloop.corpus import Sentence, sentence_id_for, tokenize

text = "Pt ambulated 50 feet with walker today."
sentence = Sentence(sentence_id_for(text), text, tokenize(text), set())


def span(fragment, etype):
    start = text.index(fragment)
    return EntitySpan(start, start + len(fragment), etype)


ann = SentenceAnnotation(
    sentence_id=sentence.sentence_id,
    spans=[
        span("Pt ambulated 50 feet with walker", EntityType.MOBILITY),
        span("ambulated", EntityType.ACTION),
        span("50 feet", EntityType.QUANTIFICATION),
        span("with walker", EntityType.ASSISTANCE),
    ],
    annotator="alice",
)

print(text)
for etype in (EntityType.MOBILITY, EntityType.ACTION, EntityType.ASSISTANCE, EntityType.QUANTIFICATION):
    bio = spans_to_bio(sentence, ann, etype)
    print(f"{etype.value:15s} {bio.tags}")
    assert bio_to_spans(sentence, bio) == ann.spans_of(etype)  # round trip

print("\nCoNLL export:")
for line in conll_lines(sentence, ann):
    print(" ", line)

print("\nlint on a clean record:", validate_annotation(sentence, ann))

# an Assistance span escaping its Mobility parent draws a NESTING warning
stray = SentenceAnnotation(
    sentence.sentence_id,
    [span("ambulated", EntityType.ACTION), span("today", EntityType.ASSISTANCE)],
    "bob",
)
for finding in validate_annotation(sentence, stray):
    print(f"lint: {finding.code} [{finding.severity}] {finding.message}")

# two blind passes disagree on Quantification; adjudication keeps it
blind_a = SentenceAnnotation(sentence.sentence_id, list(ann.spans), "alice", "blind")
blind_b = SentenceAnnotation(
    sentence.sentence_id,
    [s for s in ann.spans if s.etype != EntityType.QUANTIFICATION],
    "bob",
    "blind",
)
resolution = SentenceAnnotation(sentence.sentence_id, list(ann.spans), "alice+bob", "gold")
gold, diff = adjudicate(sentence, blind_a, blind_b, resolution)
print(f"\ngold committed with {len(gold.spans)} spans; disagreements:")
for d in diff:
    print(f"  {d.span.etype.value} ({d.span.start},{d.span.end}) in_a={d.in_a} in_b={d.in_b} in_gold={d.in_gold}")
