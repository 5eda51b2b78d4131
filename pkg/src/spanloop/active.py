"""Committee scoring, density weighting, batch selection, and pre-tagging.

Selection ranks unlabeled sentences by vote entropy of the committee's hard
Viterbi votes, multiplied by a precomputed density score raised to beta.
Density comes from a pluggable vectorizer: term-frequency TF-IDF by default,
or an external embedding file loaded with :func:`load_embedding_vectors`.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .annotations import BioTagSequence, EntityType, SentenceAnnotation, bio_to_spans
from .corpus import Sentence, SentencePool
from .features import pack_sentences
from .taggers import TAG_TO_INDEX, TaggerModel, predict_tags

__all__ = [
    "CommitteeConfig",
    "TfidfVectors",
    "EmbeddingVectors",
    "DensityCache",
    "InformativenessScore",
    "SelectionResult",
    "ActiveLearningError",
    "vectorize_sentences",
    "load_embedding_vectors",
    "cosine_similarity",
    "precompute_density",
    "vote_entropy",
    "information_density",
    "select_batch",
    "pretag_batch",
]

N_TAGS = 3


class ActiveLearningError(Exception):
    pass


@dataclass(frozen=True)
class CommitteeConfig:
    """Two-member committee; the disagreement signal defaults to Action."""

    members: tuple[str, ...] = ("crf", "perceptron")
    signal_etype: EntityType = EntityType.ACTION

    @property
    def committee_size(self) -> int:
        return len(self.members)


class TfidfVectors:
    """Unit-norm TF-IDF rows over the pool vocabulary, one row per sentence.

    idf uses the smoothed form log((1 + N) / (1 + df)) + 1 so terms present
    in every sentence still carry weight (identical sentences must stay at
    cosine 1, not collapse to zero vectors).
    """

    def __init__(self, ids: list[str], matrix: sp.csr_matrix):
        self.ids = ids
        self.matrix = matrix
        self._row = {sid: i for i, sid in enumerate(ids)}

    def row(self, sentence_id: str) -> np.ndarray:
        return np.asarray(self.matrix[self._row[sentence_id]].todense()).ravel()

    def mean_similarities(self) -> np.ndarray:
        """Mean cosine of each row to all rows (self included): X (X^T 1) / N."""
        colsum = np.asarray(self.matrix.sum(axis=0)).ravel()
        return (self.matrix @ colsum) / len(self.ids)


def vectorize_sentences(pool: SentencePool) -> TfidfVectors:
    if len(pool) == 0:
        raise ActiveLearningError("cannot vectorize an empty pool")
    ids = pool.ids()
    vocab: dict[str, int] = {}
    rows, cols, vals = [], [], []
    df_count: dict[int, int] = {}
    for r, sentence in enumerate(pool):
        counts: dict[int, int] = {}
        for tok in sentence.token_strings():
            term = tok.lower()
            j = vocab.setdefault(term, len(vocab))
            counts[j] = counts.get(j, 0) + 1
        for j, c in counts.items():
            rows.append(r)
            cols.append(j)
            vals.append(float(c))
            df_count[j] = df_count.get(j, 0) + 1
    n = len(ids)
    idf = np.zeros(len(vocab))
    for j, df in df_count.items():
        idf[j] = math.log((1 + n) / (1 + df)) + 1.0
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, len(vocab)))
    mat = mat.multiply(idf[None, :]).tocsr()
    norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
    norms[norms == 0] = 1.0
    mat = sp.diags(1.0 / norms) @ mat
    return TfidfVectors(ids=ids, matrix=mat.tocsr())


class EmbeddingVectors:
    """Dense external embeddings, L2-normalized, replacing the TF-IDF provider."""

    def __init__(self, ids: list[str], matrix: np.ndarray):
        self.ids = ids
        self.matrix = matrix
        self._row = {sid: i for i, sid in enumerate(ids)}

    def row(self, sentence_id: str) -> np.ndarray:
        return self.matrix[self._row[sentence_id]]

    def mean_similarities(self) -> np.ndarray:
        return (self.matrix @ self.matrix.sum(axis=0)) / len(self.ids)


def load_embedding_vectors(path: str | Path, pool: SentencePool) -> EmbeddingVectors:
    """Read a JSONL file of {sentence_id, vector}; must cover the whole pool."""
    by_id: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            by_id[obj["sentence_id"]] = np.asarray(obj["vector"], dtype=float)
    missing = [sid for sid in pool.ids() if sid not in by_id]
    if missing:
        raise ActiveLearningError(f"embeddings missing for {len(missing)} sentences")
    ids = pool.ids()
    mat = np.stack([by_id[sid] for sid in ids])
    norms = np.linalg.norm(mat, axis=1)
    norms[norms == 0] = 1.0
    return EmbeddingVectors(ids=ids, matrix=mat / norms[:, None])


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """dot(u, v) / (|u| |v|), clamped to [-1, 1]; zero vectors score 0."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        warnings.warn("cosine similarity of a zero vector is defined as 0")
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


@dataclass
class DensityCache:
    """Per-sentence mean similarity to the pool, stamped with its fingerprint.

    The cache is computed offline once and never refreshed as the pool
    shrinks; a fingerprint mismatch on read means it was built against a
    different pool and must be rebuilt.
    """

    densities: dict[str, float]
    pool_fingerprint: str

    def get(self, sentence_id: str) -> float:
        return self.densities[sentence_id]

    def validate_against(self, pool: SentencePool) -> None:
        if pool.fingerprint() != self.pool_fingerprint:
            raise ActiveLearningError(
                "density cache is stale: pool fingerprint mismatch"
            )

    def save(self, path: str | Path) -> None:
        payload = {
            "pool_fingerprint": self.pool_fingerprint,
            "densities": {k: self.densities[k] for k in sorted(self.densities)},
        }
        Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> DensityCache:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(densities=dict(obj["densities"]), pool_fingerprint=obj["pool_fingerprint"])


def precompute_density(pool: SentencePool, vectors: TfidfVectors | EmbeddingVectors) -> DensityCache:
    """density(x) = mean cosine of x to every pool sentence, self included."""
    if set(vectors.ids) != set(pool.ids()):
        raise ActiveLearningError("vectors do not cover the pool")
    sims = vectors.mean_similarities()
    return DensityCache(
        densities={sid: float(d) for sid, d in zip(vectors.ids, sims)},
        pool_fingerprint=pool.fingerprint(),
    )


def _vote_entropy_from_arrays(votes: list[np.ndarray], committee_size: int) -> float:
    T = len(votes[0])
    counts = np.zeros((T, N_TAGS))
    for tags in votes:
        counts[np.arange(T), tags] += 1.0
    p = counts / committee_size
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return float(-terms.sum() / T)


def vote_entropy(predictions: list[BioTagSequence], committee_size: int | None = None) -> float:
    """Mean per-token entropy of the committee's hard tag votes (natural log).

    With two members this equals (fraction of disagreeing tokens) * ln 2.
    """
    if not predictions:
        raise ActiveLearningError("no predictions")
    C = committee_size if committee_size is not None else len(predictions)
    if C != len(predictions):
        raise ActiveLearningError(f"{len(predictions)} predictions for committee of {C}")
    T = len(predictions[0].tags)
    if T < 1 or any(len(p.tags) != T for p in predictions):
        raise ActiveLearningError("predictions must share one nonzero length")
    votes = [np.array([TAG_TO_INDEX[t] for t in p.tags]) for p in predictions]
    return _vote_entropy_from_arrays(votes, C)


def information_density(ve: float, density: float, beta: float) -> float:
    """Vote entropy weighted by density^beta (beta=0 leaves it unchanged)."""
    return ve * density**beta


@dataclass(frozen=True)
class InformativenessScore:
    sentence_id: str
    vote_entropy: float
    density: float
    beta: float

    @property
    def combined(self) -> float:
        return information_density(self.vote_entropy, self.density, self.beta)


@dataclass
class SelectionResult:
    """Ranked scoring of the unlabeled pool plus the chosen top-k ids."""

    iteration: int
    ranked: list[InformativenessScore]
    chosen: list[str]
    beta: float

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "k": len(self.chosen),
            "beta": self.beta,
            "ranked": [
                {
                    "sentence_id": s.sentence_id,
                    "ve": s.vote_entropy,
                    "density": s.density,
                    "combined": s.combined,
                }
                for s in self.ranked
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> SelectionResult:
        beta = float(obj["beta"])
        ranked = [
            InformativenessScore(
                sentence_id=r["sentence_id"],
                vote_entropy=float(r["ve"]),
                density=float(r["density"]),
                beta=beta,
            )
            for r in obj["ranked"]
        ]
        return cls(
            iteration=int(obj["iteration"]),
            ranked=ranked,
            chosen=[r.sentence_id for r in ranked[: int(obj["k"])]],
            beta=beta,
        )


def committee_votes(
    sentences: list[Sentence], committee: list[TaggerModel]
) -> list[list[np.ndarray]]:
    """Per-member integer tag votes for each sentence (packed once if shared)."""
    if not committee:
        raise ActiveLearningError("empty committee")
    etypes = {m.etype for m in committee}
    if len(etypes) != 1:
        raise ActiveLearningError(f"committee mixes entity types: {etypes}")
    fx = {(m.config.hash_buckets, m.config.feature_seed) for m in committee}
    if len(fx) == 1:
        packed = pack_sentences(sentences, committee[0].extractor)
        per_member = [m.decode_packed(packed) for m in committee]
    else:
        per_member = []
        for m in committee:
            packed = pack_sentences(sentences, m.extractor)
            per_member.append(m.decode_packed(packed))
    return [list(votes) for votes in zip(*per_member)]


def select_batch(
    sentences: list[Sentence],
    committee: list[TaggerModel],
    cache: DensityCache,
    k: int = 125,
    beta: float = 1.0,
    iteration: int = 0,
) -> SelectionResult:
    """Score every unlabeled sentence and choose the top k.

    Ranking is by combined score descending with ties broken by sentence_id
    ascending, so selection is deterministic.  Asking for more than the pool
    holds returns the whole pool with a warning.
    """
    if k < 0:
        raise ActiveLearningError("k must be >= 0")
    if k > len(sentences):
        warnings.warn(f"k={k} exceeds pool size {len(sentences)}; selecting all")
        k = len(sentences)
    scores: list[InformativenessScore] = []
    if sentences:
        votes = committee_votes(sentences, committee)
        C = len(committee)
        for sentence, v in zip(sentences, votes):
            ve = _vote_entropy_from_arrays(v, C)
            scores.append(
                InformativenessScore(
                    sentence_id=sentence.sentence_id,
                    vote_entropy=ve,
                    density=cache.get(sentence.sentence_id),
                    beta=beta,
                )
            )
    ranked = sorted(scores, key=lambda s: (-s.combined, s.sentence_id))
    return SelectionResult(
        iteration=iteration,
        ranked=ranked,
        chosen=[s.sentence_id for s in ranked[:k]],
        beta=beta,
    )


def pretag_batch(
    models: dict[EntityType, TaggerModel], sentences: list[Sentence]
) -> list[SentenceAnnotation]:
    """Machine pre-annotation: per-type decode merged into one record per sentence."""
    if not sentences:
        return []
    spans_per_sentence: list[list] = [[] for _ in sentences]
    for etype, model in models.items():
        if model.etype != etype:
            raise ActiveLearningError(f"model for {etype} has etype {model.etype}")
        for i, bio in enumerate(predict_tags(model, sentences)):
            spans_per_sentence[i].extend(bio_to_spans(sentences[i], bio))
    return [
        SentenceAnnotation(
            sentence_id=s.sentence_id,
            spans=sorted(spans),
            annotator="machine",
            phase="pretag",
        )
        for s, spans in zip(sentences, spans_per_sentence)
    ]
