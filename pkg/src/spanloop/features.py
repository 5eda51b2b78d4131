"""Hand-crafted token features, hashed into a fixed-size index space.

Feature strings are hashed with a keyed 64-bit blake2b into ``hash_buckets``
slots, so feature ids are identical across runs and machines for the same
seed.  Collisions are accepted (and measured in tests); they trade a bounded
memory footprint for a small amount of feature aliasing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .corpus import Sentence

__all__ = ["FeatureExtractor", "PackedSentences", "pack_sentences"]

_PAD = "<pad>"


def _shape(tok: str) -> str:
    out = []
    for ch in tok:
        if ch.isupper():
            out.append("X")
        elif ch.islower():
            out.append("x")
        elif ch.isdigit():
            out.append("d")
        else:
            out.append("p")
    return "".join(out)


class FeatureExtractor:
    """Deterministic sparse features over a ±2 token window."""

    def __init__(self, hash_buckets: int = 2**22, seed: int = 1013):
        if hash_buckets < 2:
            raise ValueError("hash_buckets must be >= 2")
        self.hash_buckets = hash_buckets
        self.seed = seed
        self._key = seed.to_bytes(8, "little", signed=False)
        self._cache: dict[str, int] = {}

    def _bucket(self, feature: str) -> int:
        idx = self._cache.get(feature)
        if idx is None:
            digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8, key=self._key).digest()
            idx = int.from_bytes(digest, "little") % self.hash_buckets
            self._cache[feature] = idx
        return idx

    def feature_strings(self, sentence: Sentence, t: int) -> list[str]:
        toks = sentence.token_strings()
        if not 0 <= t < len(toks):
            raise IndexError(f"token index {t} out of range")

        def at(i: int) -> str:
            return toks[i].lower() if 0 <= i < len(toks) else _PAD

        w = toks[t].lower()
        feats = [
            "bias",
            f"w0={w}",
            f"w-1={at(t - 1)}",
            f"w+1={at(t + 1)}",
            f"w-2={at(t - 2)}",
            f"w+2={at(t + 2)}",
            f"shape={_shape(toks[t])}",
        ]
        for k in (1, 2, 3):
            if len(w) >= k:
                feats.append(f"suf{k}={w[-k:]}")
        if w.isdigit():
            feats.append("isdigit")
        if t == 0:
            feats.append("bos")
        if t == len(toks) - 1:
            feats.append("eos")
        return feats

    def extract(self, sentence: Sentence, t: int) -> np.ndarray:
        """Hashed feature ids for token t (duplicates kept: counts matter)."""
        return np.array(
            [self._bucket(f) for f in self.feature_strings(sentence, t)], dtype=np.int64
        )

    def extract_sentence(self, sentence: Sentence) -> list[np.ndarray]:
        return [self.extract(sentence, t) for t in range(len(sentence.tokens))]


@dataclass
class PackedSentences:
    """Flat arrays over a sentence batch, shaped for vectorized tagging.

    ``flat_ids[k]`` is a hashed feature id; ``feat_tok[k]`` the global token
    index it belongs to.  ``tok_feat_starts`` delimits each token's slice of
    ``flat_ids``; ``sent_tok_starts`` delimits each sentence's token range.
    """

    flat_ids: np.ndarray       # (F,) int64
    feat_tok: np.ndarray       # (F,) int64
    tok_feat_starts: np.ndarray  # (n_tokens + 1,) int64
    sent_tok_starts: np.ndarray  # (n_sents + 1,) int64
    lengths: np.ndarray        # (n_sents,) int64
    tok_sent: np.ndarray       # (n_tokens,) int64
    tok_pos: np.ndarray        # (n_tokens,) int64, position within sentence

    @property
    def n_sents(self) -> int:
        return len(self.lengths)

    @property
    def n_tokens(self) -> int:
        return len(self.tok_sent)

    @property
    def max_len(self) -> int:
        return int(self.lengths.max()) if self.n_sents else 0

    def emissions(self, weights: np.ndarray) -> np.ndarray:
        """Padded (n_sents, max_len, n_tags) emission scores under ``weights``."""
        n_tags = weights.shape[1]
        gathered = weights[self.flat_ids]  # (F, n_tags)
        per_token = np.add.reduceat(gathered, self.tok_feat_starts[:-1], axis=0)
        out = np.zeros((self.n_sents, self.max_len, n_tags))
        out[self.tok_sent, self.tok_pos] = per_token
        return out

    def scatter_token_values(self, values: np.ndarray, n_buckets: int) -> np.ndarray:
        """Accumulate per-token tag vectors into a (n_buckets, n_tags) gradient."""
        n_tags = values.shape[1]
        per_feat = values[self.feat_tok]  # (F, n_tags)
        out = np.empty((n_buckets, n_tags))
        for j in range(n_tags):
            out[:, j] = np.bincount(self.flat_ids, weights=per_feat[:, j], minlength=n_buckets)
        return out


def pack_sentences(sentences: list[Sentence], extractor: FeatureExtractor) -> PackedSentences:
    flat: list[np.ndarray] = []
    tok_feat_starts = [0]
    lengths = []
    sent_tok_starts = [0]
    tok_sent: list[int] = []
    tok_pos: list[int] = []
    for si, sentence in enumerate(sentences):
        per_tok = extractor.extract_sentence(sentence)
        lengths.append(len(per_tok))
        sent_tok_starts.append(sent_tok_starts[-1] + len(per_tok))
        for pos, ids in enumerate(per_tok):
            flat.append(ids)
            tok_feat_starts.append(tok_feat_starts[-1] + len(ids))
            tok_sent.append(si)
            tok_pos.append(pos)
    flat_ids = np.concatenate(flat) if flat else np.zeros(0, dtype=np.int64)
    n_tokens = len(tok_sent)
    feat_tok = np.repeat(
        np.arange(n_tokens, dtype=np.int64),
        np.diff(np.asarray(tok_feat_starts, dtype=np.int64)),
    )
    return PackedSentences(
        flat_ids=flat_ids,
        feat_tok=feat_tok,
        tok_feat_starts=np.asarray(tok_feat_starts, dtype=np.int64),
        sent_tok_starts=np.asarray(sent_tok_starts, dtype=np.int64),
        lengths=np.asarray(lengths, dtype=np.int64),
        tok_sent=np.asarray(tok_sent, dtype=np.int64),
        tok_pos=np.asarray(tok_pos, dtype=np.int64),
    )
