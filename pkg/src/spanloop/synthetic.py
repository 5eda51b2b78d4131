"""Deterministic synthetic clinical-style corpus with known gold spans.

Entity sentences follow a trigger-word grammar: a subject, a movement
trigger (Action), optional measured distance (Quantification) and support
phrase (Assistance), all wrapped in a Mobility span.  The trigger inventory
is large and long-tailed, so small labeled sets leave triggers uncovered,
and a slice of the irrelevant sentences reuses trigger tokens in
non-mobility contexts; both properties give committee disagreement
something real to find.  Irrelevant sentences are drawn from a wide filler
vocabulary so no degenerate near-duplicate cluster dominates density.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .annotations import EntitySpan, EntityType, SentenceAnnotation
from .corpus import Sentence, sentence_id_for, tokenize

__all__ = ["generate_corpus", "write_corpus", "load_corpus", "to_labeled", "ACTION_TRIGGERS"]

SUBJECTS = ["pt", "patient", "he", "she", "resident"]

ACTION_TRIGGERS = [
    "ambulated", "walked", "transferred", "climbed", "stood", "pivoted",
    "stepped", "marched", "shuffled", "paced", "crawled", "hopped",
    "scooted", "rolled", "limped", "staggered", "strolled", "wandered",
    "trudged", "sidestepped", "hobbled", "strode", "trotted", "crept",
    "lurched", "ascended", "descended", "vaulted", "leaned", "squatted",
    "lunged", "skipped", "sprinted", "jogged", "waddled", "tiptoed",
    "plodded", "sauntered", "slid", "swayed", "twisted", "stretched",
]

ADVERBS = ["slowly", "briskly", "steadily", "cautiously", "independently", ""]

QUANT_PHRASES = ["50 feet", "100 feet", "25 meters", "2 flights", "3 laps", "x 2", "x 3"]

ASSIST_PHRASES = [
    "with walker", "with cane", "with crutches", "with rn assist",
    "with contact guard", "with min assist",
]

TAILS = [
    "today", "this morning", "without difficulty", "before breakfast",
    "on the unit", "at a steady pace", "per routine", "during therapy",
]

FILLER_VOCAB = [
    "vitals", "stable", "overnight", "labs", "reviewed", "morning", "family",
    "bedside", "support", "medication", "administered", "ordered", "diet",
    "tolerated", "nausea", "sleep", "adequate", "report", "pain", "controlled",
    "current", "regimen", "wound", "clean", "dressing", "changed", "appetite",
    "fair", "lunch", "mood", "pleasant", "cooperative", "afebrile", "alert",
    "breathing", "unlabored", "room", "air", "acute", "events", "shift",
    "plan", "discussed", "care", "team", "follow", "scheduled", "consult",
]

# trigger tokens in non-mobility contexts: same surface form, no entities
CONFUSER_SUBJECTS = ["records", "paperwork", "coverage", "report", "chart", "fax"]
CONFUSER_TAILS = ["to the clinic", "to night staff", "to the archive", "by the clerk", "to billing"]

# same sentence shape as the mobility grammar, but the verb is no action:
# the verb's lexical identity, not the surface pattern, decides the label
NON_ACTION_VERBS = [
    "reported", "requested", "refused", "denied", "stated", "asked",
    "endorsed", "voiced", "required", "received", "rested", "napped",
    "slept", "ate", "complained", "verbalized", "acknowledged", "declined",
    "appeared", "remained", "seemed", "felt", "noted", "mentioned",
]

# non-action sentences reuse the action grammar's adverbs and tails, so the
# surface shape gives nothing away; only the verb token separates the classes


def _zipf_weights(n: int, s: float = 1.05) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


TRIGGER_WEIGHTS = _zipf_weights(len(ACTION_TRIGGERS))
UNIFORM_WEIGHTS = np.full(len(ACTION_TRIGGERS), 1.0 / len(ACTION_TRIGGERS))


def _make_sentence(text: str) -> Sentence:
    return Sentence(
        sentence_id=sentence_id_for(text),
        text=text,
        tokens=tokenize(text),
        doc_ids={"synthetic/corpus"},
    )


def _relevant_sentence(
    rng: np.random.Generator, trigger_weights: np.ndarray
) -> tuple[str, list[tuple[str, EntityType]]]:
    """Text plus (fragment, etype) pairs; fragments are unique in the text."""
    subject = SUBJECTS[rng.integers(len(SUBJECTS))]
    trigger = ACTION_TRIGGERS[rng.choice(len(ACTION_TRIGGERS), p=trigger_weights)]
    parts = [subject, trigger]
    fragments = [(trigger, EntityType.ACTION)]
    adverb = ADVERBS[rng.integers(len(ADVERBS))]
    if adverb:
        parts.append(adverb)
    if rng.random() < 0.35:
        quant = QUANT_PHRASES[rng.integers(len(QUANT_PHRASES))]
        parts.append(quant)
        fragments.append((quant, EntityType.QUANTIFICATION))
    if rng.random() < 0.35:
        assist = ASSIST_PHRASES[rng.integers(len(ASSIST_PHRASES))]
        parts.append(assist)
        fragments.append((assist, EntityType.ASSISTANCE))
    mobility = " ".join(parts)
    fragments.append((mobility, EntityType.MOBILITY))
    if rng.random() < 0.7:
        parts.append(TAILS[rng.integers(len(TAILS))])
    return " ".join(parts), fragments


def _irrelevant_sentence(rng: np.random.Generator, trigger_weights: np.ndarray) -> str:
    roll = rng.random()
    if roll < 0.12:
        subject = CONFUSER_SUBJECTS[rng.integers(len(CONFUSER_SUBJECTS))]
        trigger = ACTION_TRIGGERS[rng.choice(len(ACTION_TRIGGERS), p=trigger_weights)]
        tail = CONFUSER_TAILS[rng.integers(len(CONFUSER_TAILS))]
        return f"{subject} {trigger} {tail}"
    if roll < 0.62:
        subject = SUBJECTS[rng.integers(len(SUBJECTS))]
        verb = NON_ACTION_VERBS[rng.integers(len(NON_ACTION_VERBS))]
        parts = [subject, verb]
        adverb = ADVERBS[rng.integers(len(ADVERBS))]
        if adverb:
            parts.append(adverb)
        if rng.random() < 0.7:
            parts.append(TAILS[rng.integers(len(TAILS))])
        return " ".join(parts)
    n_words = int(rng.integers(4, 9))
    words = rng.choice(FILLER_VOCAB, size=n_words, replace=False)
    return " ".join(words)


def generate_corpus(
    n: int,
    seed: int = 13,
    relevant_fraction: float = 0.4,
    trigger_distribution: str = "zipf",
) -> list[tuple[Sentence, SentenceAnnotation]]:
    """``n`` unique sentences with generator-derived gold annotations.

    ``trigger_distribution`` is "zipf" for pool-like long-tailed trigger use
    or "uniform" for evaluation sets that weight the whole inventory evenly.
    """
    if trigger_distribution not in ("zipf", "uniform"):
        raise ValueError(f"unknown trigger distribution {trigger_distribution!r}")
    weights = TRIGGER_WEIGHTS if trigger_distribution == "zipf" else UNIFORM_WEIGHTS
    rng = np.random.default_rng(seed)
    items: list[tuple[Sentence, SentenceAnnotation]] = []
    seen: set[str] = set()
    attempts = 0
    while len(items) < n:
        attempts += 1
        if attempts > 200 * n:
            raise RuntimeError("grammar too small for requested corpus size")
        if rng.random() < relevant_fraction:
            text, fragments = _relevant_sentence(rng, weights)
        else:
            text, fragments = _irrelevant_sentence(rng, weights), []
        sentence = _make_sentence(text)
        if sentence.sentence_id in seen:
            continue
        seen.add(sentence.sentence_id)
        spans = []
        for fragment, etype in fragments:
            start = text.index(fragment)
            spans.append(EntitySpan(start=start, end=start + len(fragment), etype=etype))
        items.append(
            (
                sentence,
                SentenceAnnotation(
                    sentence_id=sentence.sentence_id,
                    spans=sorted(spans),
                    annotator="generator",
                    phase="gold",
                ),
            )
        )
    return items


def to_labeled(
    items: list[tuple[Sentence, SentenceAnnotation]], etype: EntityType
):
    """(Sentence, BioTagSequence) pairs for one entity type."""
    from .annotations import spans_to_bio

    return [(s, spans_to_bio(s, ann, etype)) for s, ann in items]


def write_corpus(
    items: list[tuple[Sentence, SentenceAnnotation]], out_dir: str | Path
) -> tuple[Path, Path]:
    """Write pool.jsonl and gold.jsonl; returns the two paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pool_path = out / "pool.jsonl"
    gold_path = out / "gold.jsonl"
    with open(pool_path, "w", encoding="utf-8") as f:
        for sentence, _ in items:
            f.write(json.dumps(sentence.to_json(), sort_keys=True) + "\n")
    with open(gold_path, "w", encoding="utf-8") as f:
        for _, ann in items:
            f.write(json.dumps(ann.to_json(), sort_keys=True) + "\n")
    return pool_path, gold_path


def load_corpus(pool_path: str | Path, gold_path: str | Path):
    sentences = {}
    with open(pool_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                s = Sentence.from_json(json.loads(line))
                sentences[s.sentence_id] = s
    items = []
    with open(gold_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                ann = SentenceAnnotation.from_json(json.loads(line))
                items.append((sentences[ann.sentence_id], ann))
    return items
