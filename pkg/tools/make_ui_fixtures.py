"""Regenerate the shared lint-parity fixtures consumed by the workbench tests.

Every fixture carries a sentence (text + token offsets), a span set, and the
server-side validator's findings.  The TypeScript lint replica must produce
the identical findings; tests/test_ui_fixtures.py keeps this file current.

Usage: python3 tools/make_ui_fixtures.py [out_path]
"""

import json
import sys
from pathlib import Path

from spanloop.annotations import EntitySpan, EntityType, SentenceAnnotation, validate_annotation
from spanloop.corpus import Sentence, sentence_id_for, tokenize
from spanloop.synthetic import generate_corpus

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "frontend" / "fixtures" / "lint_fixtures.json"


def sent(text: str) -> Sentence:
    return Sentence(sentence_id_for(text), text, tokenize(text), set())


def span_on(text: str, fragment: str, etype: EntityType) -> EntitySpan:
    start = text.index(fragment)
    return EntitySpan(start, start + len(fragment), etype)


def hand_cases() -> list[tuple[Sentence, list[EntitySpan]]]:
    cases = []

    text = "Pt ambulated 50 feet with walker today."
    s = sent(text)
    cases.append(
        (
            s,
            [
                span_on(text, "Pt ambulated 50 feet with walker", EntityType.MOBILITY),
                span_on(text, "ambulated", EntityType.ACTION),
                span_on(text, "50 feet", EntityType.QUANTIFICATION),
                span_on(text, "with walker", EntityType.ASSISTANCE),
            ],
        )
    )

    # stray nested types outside any Mobility parent
    text = "uses walker at home daily"
    s = sent(text)
    cases.append((s, [span_on(text, "walker", EntityType.ASSISTANCE)]))

    # same-type overlap (hard error)
    text = "Pt walks and walks again"
    s = sent(text)
    cases.append(
        (
            s,
            [
                EntitySpan(0, 8, EntityType.ACTION),
                EntitySpan(3, 12, EntityType.ACTION),
            ],
        )
    )

    # out of range plus a valid span
    text = "short note"
    s = sent(text)
    cases.append((s, [EntitySpan(0, 99, EntityType.ACTION), EntitySpan(0, 5, EntityType.MOBILITY)]))

    # unaligned boundaries (warning, snapped later)
    text = "Pt ambulates daily"
    s = sent(text)
    cases.append(
        (
            s,
            [
                span_on(text, "Pt ambulates daily", EntityType.MOBILITY),
                EntitySpan(4, 8, EntityType.ACTION),
            ],
        )
    )

    # nothing relevant at all
    text = "vitals stable overnight"
    s = sent(text)
    cases.append((s, []))
    cases.append((s, [span_on(text, "overnight", EntityType.QUANTIFICATION)]))

    # multiple overlaps of one type plus nesting issues
    text = "he walked then walked then walked"
    s = sent(text)
    cases.append(
        (
            s,
            [
                EntitySpan(3, 14, EntityType.ACTION),
                EntitySpan(9, 20, EntityType.ACTION),
                EntitySpan(15, 25, EntityType.ACTION),
            ],
        )
    )

    # zero-length and inverted spans are out-of-range errors
    text = "edge cases abound"
    s = sent(text)
    cases.append((s, [EntitySpan(3, 3, EntityType.ACTION)]))

    return cases


def corpus_cases(n: int = 40) -> list[tuple[Sentence, list[EntitySpan]]]:
    cases = []
    for sentence, ann in generate_corpus(n, seed=909):
        cases.append((sentence, list(ann.spans)))
    return cases


def main(out_path: Path) -> None:
    fixtures = []
    for sentence, spans in hand_cases() + corpus_cases():
        ann = SentenceAnnotation(sentence.sentence_id, spans, "fixture", "blind")
        findings = validate_annotation(sentence, ann)
        fixtures.append(
            {
                "text": sentence.text,
                "tokens": [[a, b] for a, b in sentence.tokens],
                "spans": [s.to_json() for s in sorted(spans)],
                "findings": [
                    {"code": f.code, "severity": f.severity, "message": f.message}
                    for f in findings
                ],
            }
        )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(fixtures, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(fixtures)} fixtures -> {out_path}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_OUT)
