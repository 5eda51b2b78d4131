"""Inverted-index keyword search and iterative keyword expansion.

Downsizes the sentence pool to domain-relevant sentences with a boolean OR
query over an expanding keyword set.  Matching is token-exact; inflections
are materialized into the keyword set rather than stemmed at query time.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import SentencePool

__all__ = [
    "KeywordSet",
    "InvertedIndex",
    "TermFrequencyReport",
    "load_default_stopwords",
    "init_keyword_set",
    "build_inverted_index",
    "query_any_keyword",
    "rank_candidate_keywords",
    "inflect_keyword",
    "expand_keywords_iteration",
]

VOWELS = "aeiou"


class RetrievalError(Exception):
    pass


def load_default_stopwords() -> set[str]:
    """The stopword list vendored with the package, one word per line."""
    text = resources.files("spanloop.data").joinpath("stopwords.txt").read_text("utf-8")
    return {line.strip() for line in text.splitlines() if line.strip()}


@dataclass
class KeywordSet:
    """Versioned keyword collection with per-term provenance.

    Provenance values: ``seed`` (from the initial descriptions), ``manual``
    (operator-accepted during expansion), ``inflection`` (rule-generated).
    """

    version: int
    keywords: set[str]
    provenance: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "keywords": sorted(self.keywords),
            "provenance": {k: self.provenance[k] for k in sorted(self.provenance)},
        }

    @classmethod
    def from_json(cls, obj: dict) -> KeywordSet:
        return cls(
            version=int(obj["version"]),
            keywords=set(obj["keywords"]),
            provenance=dict(obj.get("provenance", {})),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> KeywordSet:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def inflect_keyword(term: str) -> set[str]:
    """The term plus rule-generated plural/3rd-person, -ed, and -ing forms.

    Purely orthographic rules (e-drop, consonant doubling, y->ie); irregular
    forms are out of reach and unneeded, since a wrong inflection simply
    never matches a token.  Non-lowercase-alphabetic input is returned
    lowercased, uninflected.
    """
    if not (term.isalpha() and term.islower() and term.isascii()):
        return {term.lower()}
    forms = {term}

    # plural / 3rd person singular
    if term.endswith(("s", "x", "z", "ch", "sh", "o")):
        forms.add(term + "es")
    elif len(term) > 1 and term.endswith("y") and term[-2] not in VOWELS:
        forms.add(term[:-1] + "ies")
    else:
        forms.add(term + "s")

    doubled = (
        len(term) >= 3
        and term[-1] not in VOWELS + "wxy"
        and term[-2] in VOWELS
        and term[-3] not in VOWELS
    )

    # past tense
    if term.endswith("e"):
        forms.add(term + "d")
    elif len(term) > 1 and term.endswith("y") and term[-2] not in VOWELS:
        forms.add(term[:-1] + "ied")
    elif doubled:
        forms.add(term + term[-1] + "ed")
    else:
        forms.add(term + "ed")

    # gerund
    if term.endswith("ie"):
        forms.add(term[:-2] + "ying")
    elif term.endswith("e") and not term.endswith("ee"):
        forms.add(term[:-1] + "ing")
    elif doubled:
        forms.add(term + term[-1] + "ing")
    else:
        forms.add(term + "ing")

    return forms


def init_keyword_set(seed_terms: list[str], stopwords: set[str] | None = None) -> KeywordSet:
    """Build the version-1 keyword set from seed terms plus their inflections."""
    stopwords = stopwords if stopwords is not None else load_default_stopwords()
    keywords: set[str] = set()
    provenance: dict[str, str] = {}
    for raw in seed_terms:
        term = raw.strip().lower()
        if not term or term in stopwords:
            continue
        keywords.add(term)
        provenance[term] = "seed"
        for form in inflect_keyword(term):
            if form not in keywords:
                keywords.add(form)
                provenance[form] = "inflection"
    if not keywords:
        raise RetrievalError("keyword set empty after stopword filtering")
    return KeywordSet(version=1, keywords=keywords, provenance=provenance)


class InvertedIndex:
    """term -> sorted posting list of sentence_ids over a fixed pool."""

    def __init__(self, postings: dict[str, list[str]], pool_size: int):
        self.postings = postings
        self.pool_size = pool_size

    def lookup(self, term: str) -> list[str]:
        return self.postings.get(term.lower(), [])

    def __contains__(self, term: str) -> bool:
        return term.lower() in self.postings


def build_inverted_index(pool: SentencePool) -> InvertedIndex:
    """Index every lowercased token of every pool sentence."""
    if len(pool) == 0:
        raise RetrievalError("cannot index an empty pool")
    acc: dict[str, set[str]] = {}
    for sentence in pool:
        for tok in sentence.token_strings():
            acc.setdefault(tok.lower(), set()).add(sentence.sentence_id)
    postings = {term: sorted(ids) for term, ids in acc.items()}
    return InvertedIndex(postings=postings, pool_size=len(pool))


def query_any_keyword(index: InvertedIndex, ks: KeywordSet) -> set[str]:
    """Boolean OR over all keywords: the union of their posting lists."""
    if not ks.keywords:
        raise RetrievalError("empty keyword set")
    result: set[str] = set()
    for kw in ks.keywords:
        result.update(index.lookup(kw))
    return result


@dataclass
class TermFrequencyReport:
    """Candidate expansion terms ranked by frequency desc, ties by term."""

    entries: list[tuple[str, int]]

    def top(self, n: int) -> list[tuple[str, int]]:
        return self.entries[:n]


def rank_candidate_keywords(
    retrieved: set[str],
    pool: SentencePool,
    ks: KeywordSet,
    stopwords: set[str] | None = None,
) -> TermFrequencyReport:
    """Rank content words of retrieved sentences as expansion candidates.

    Excluded: stopwords, current keywords, pure-digit tokens, and tokens
    with no alphabetic character (punctuation is never a content word).
    Frequencies are raw token counts over the retrieved sentences.
    """
    stopwords = stopwords if stopwords is not None else load_default_stopwords()
    counts: dict[str, int] = {}
    for sid in retrieved:
        for tok in pool.get(sid).token_strings():
            term = tok.lower()
            if term in stopwords or term in ks.keywords:
                continue
            if term.isdigit() or not any(c.isalpha() for c in term):
                continue
            counts[term] = counts.get(term, 0) + 1
    entries = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return TermFrequencyReport(entries=entries)


def expand_keywords_iteration(
    index: InvertedIndex,
    ks: KeywordSet,
    stopwords: set[str],
    accepted: list[str],
) -> KeywordSet:
    """One expansion round: union in accepted terms and their inflections.

    The accept decision is the operator's; this only warns when an accepted
    term looks unproductive (a stopword, or absent from the index).
    """
    keywords = set(ks.keywords)
    provenance = dict(ks.provenance)
    for raw in accepted:
        term = raw.strip().lower()
        if not term:
            continue
        if term in stopwords:
            warnings.warn(f"accepted keyword {term!r} is a stopword")
        if term not in index:
            warnings.warn(f"accepted keyword {term!r} matches no pool sentence")
        if term not in keywords:
            keywords.add(term)
            provenance[term] = "manual"
        for form in inflect_keyword(term):
            if form not in keywords:
                keywords.add(form)
                provenance[form] = "inflection"
    return KeywordSet(version=ks.version + 1, keywords=keywords, provenance=provenance)
