"""Raw text ingestion, sentence segmentation, tokenization, and pool deduplication."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "Document",
    "Sentence",
    "SentencePool",
    "IngestResult",
    "ingest_documents",
    "segment_sentences",
    "tokenize",
    "normalize_text",
    "sentence_id_for",
    "deduplicate_sentences",
]

# Words that end with a period without ending a sentence.  Checked
# case-insensitively against the token preceding a candidate boundary.
ABBREVIATIONS = frozenset({
    "dr", "mr", "mrs", "ms", "prof", "jr", "sr", "st", "vs", "etc",
    "e.g", "i.e", "cf", "al", "fig", "no", "dept", "approx", "appt",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
    "oct", "nov", "dec", "mon", "tue", "wed", "thu", "fri", "sat", "sun",
})

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class Document:
    """One input text note. ``doc_id`` must be unique within a project."""

    doc_id: str
    source_tag: str
    text: str


@dataclass
class Sentence:
    """A pool element: text plus token offsets and originating documents.

    ``tokens`` are half-open ``(start, end)`` character intervals into
    ``text``, non-overlapping and strictly increasing.  ``sentence_id`` is a
    pure function of the normalized text, so duplicates collide by design.
    """

    sentence_id: str
    text: str
    tokens: list[tuple[int, int]]
    doc_ids: set[str] = field(default_factory=set)

    def token_strings(self) -> list[str]:
        return [self.text[s:e] for s, e in self.tokens]

    def to_json(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "text": self.text,
            "tokens": [[s, e] for s, e in self.tokens],
            "doc_ids": sorted(self.doc_ids),
        }

    @classmethod
    def from_json(cls, obj: dict) -> Sentence:
        return cls(
            sentence_id=obj["sentence_id"],
            text=obj["text"],
            tokens=[(int(s), int(e)) for s, e in obj["tokens"]],
            doc_ids=set(obj.get("doc_ids", [])),
        )


@dataclass
class IngestResult:
    documents: list[Document]
    errors: list[tuple[str, str]]  # (path, reason)


class CorpusError(Exception):
    pass


def normalize_text(text: str) -> str:
    """Lowercase and collapse whitespace runs; the dedup equivalence key."""
    return _WS_RE.sub(" ", text.strip()).lower()


def sentence_id_for(text: str) -> str:
    """64-bit content hash of the normalized text, hex-encoded."""
    norm = normalize_text(text)
    return hashlib.blake2b(norm.encode("utf-8"), digest_size=8).hexdigest()


def tokenize(text: str) -> list[tuple[int, int]]:
    """Split on whitespace and punctuation, keeping character offsets."""
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def ingest_documents(paths: list[str | Path], source_tag: str) -> IngestResult:
    """Read one Document per file, in sorted-path order.

    Unreadable or empty files are collected as per-file errors and skipped.
    Raises CorpusError only when nothing at all could be ingested.
    """
    documents: list[Document] = []
    errors: list[tuple[str, str]] = []
    for path in sorted(Path(p) for p in paths):
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            errors.append((str(path), str(exc)))
            continue
        if not text.strip():
            errors.append((str(path), "empty file"))
            continue
        documents.append(Document(doc_id=f"{source_tag}/{path.name}", source_tag=source_tag, text=text))
    if not documents:
        raise CorpusError(f"no documents ingested ({len(errors)} errors)")
    return IngestResult(documents=documents, errors=errors)


def _is_boundary(text: str, i: int) -> bool:
    """True when the terminal-punctuation run ending at index i closes a sentence."""
    # Find what follows the punctuation run.
    j = i + 1
    while j < len(text) and text[j] in ".!?\"')]":
        j += 1
    k = j
    while k < len(text) and text[k] in " \t":
        k += 1
    if k >= len(text) or text[k] == "\n":
        return True
    nxt = text[k]
    if nxt.islower():
        return False
    # Abbreviation guard: the word directly before a '.' blocks the split.
    if text[i] == ".":
        m = re.search(r"([A-Za-z][A-Za-z.]*)\.$", text[: i + 1])
        if m:
            word = m.group(1).lower().rstrip(".")
            if word in ABBREVIATIONS or len(word) == 1:
                return False
    return True


def segment_sentences(doc: Document) -> list[Sentence]:
    """Deterministic rule-based segmentation of note-style text.

    Boundaries: newlines are hard breaks; ``. ! ?`` break when followed by
    a non-lowercase continuation and not preceded by a known abbreviation or
    single initial.  Segments with no tokens are dropped.
    """
    text = doc.text
    boundaries: list[int] = []
    for i, ch in enumerate(text):
        if ch == "\n":
            boundaries.append(i + 1)
        elif ch in ".!?" and (i + 1 >= len(text) or text[i + 1] not in ".!?"):
            if _is_boundary(text, i):
                # Include trailing closers (quotes/brackets) in this sentence.
                j = i + 1
                while j < len(text) and text[j] in "\"')]":
                    j += 1
                boundaries.append(j)
    boundaries.append(len(text))

    sentences: list[Sentence] = []
    prev = 0
    for b in boundaries:
        if b <= prev:
            continue
        raw = text[prev:b]
        stripped = raw.strip()
        if stripped:
            tokens = tokenize(stripped)
            if tokens:
                sentences.append(
                    Sentence(
                        sentence_id=sentence_id_for(stripped),
                        text=stripped,
                        tokens=tokens,
                        doc_ids={doc.doc_id},
                    )
                )
        prev = b
    return sentences


class SentencePool:
    """Deduplicated sentence collection, ordered by first occurrence."""

    def __init__(self, sentences: list[Sentence] | None = None):
        self._order: list[str] = []
        self._by_id: dict[str, Sentence] = {}
        for s in sentences or []:
            self.add(s)

    def add(self, sentence: Sentence) -> None:
        existing = self._by_id.get(sentence.sentence_id)
        if existing is None:
            self._by_id[sentence.sentence_id] = Sentence(
                sentence_id=sentence.sentence_id,
                text=sentence.text,
                tokens=list(sentence.tokens),
                doc_ids=set(sentence.doc_ids),
            )
            self._order.append(sentence.sentence_id)
        else:
            existing.doc_ids |= sentence.doc_ids

    def __len__(self) -> int:
        return len(self._order)

    def __iter__(self):
        return (self._by_id[sid] for sid in self._order)

    def __contains__(self, sentence_id: str) -> bool:
        return sentence_id in self._by_id

    def get(self, sentence_id: str) -> Sentence:
        return self._by_id[sentence_id]

    def ids(self) -> list[str]:
        return list(self._order)

    def save_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for s in self:
                f.write(json.dumps(s.to_json(), sort_keys=True) + "\n")

    @classmethod
    def load_jsonl(cls, path: str | Path) -> SentencePool:
        pool = cls()
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    pool.add(Sentence.from_json(json.loads(line)))
        return pool

    def fingerprint(self) -> str:
        """Hash of the ordered id list; stamps caches computed against this pool."""
        h = hashlib.blake2b(digest_size=16)
        for sid in self._order:
            h.update(sid.encode("ascii"))
        return h.hexdigest()


def deduplicate_sentences(sentences: list[Sentence]) -> SentencePool:
    """Collapse sentences whose normalized text matches; doc_ids are unioned.

    Idempotent: deduplicating a pool's contents again changes nothing.
    """
    return SentencePool(sentences)
