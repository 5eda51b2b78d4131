"""Averaged structured perceptron over the same features and BIO mask as the CRF.

The two taggers share feature extraction and transition masking but learn
through different objectives (global log-linear vs. online margin), which is
what makes their disagreement a useful query signal.
"""

from __future__ import annotations

import numpy as np

from .crf import N_TAGS, START_SCORE, effective_transitions
from .features import PackedSentences

__all__ = ["train_perceptron"]


def _decode_one(
    emit: np.ndarray, trans_eff: np.ndarray
) -> np.ndarray:
    """Single-sentence Viterbi; ties resolve to the earlier tag (O < B < I)."""
    L = emit.shape[0]
    delta = emit[0] + START_SCORE
    bp = np.zeros((L, N_TAGS), dtype=np.int64)
    for t in range(1, L):
        scores = delta[:, None] + trans_eff  # (from, to)
        bp[t] = np.argmax(scores, axis=0)
        delta = emit[t] + np.max(scores, axis=0)
    tags = np.zeros(L, dtype=np.int64)
    tags[L - 1] = int(np.argmax(delta))
    for t in range(L - 2, -1, -1):
        tags[t] = bp[t + 1, tags[t + 1]]
    return tags


def _bigram_counts(tags: np.ndarray) -> np.ndarray:
    counts = np.zeros((N_TAGS, N_TAGS))
    if len(tags) > 1:
        np.add.at(counts, (tags[:-1], tags[1:]), 1.0)
    return counts


def train_perceptron(
    packed: PackedSentences,
    labels: np.ndarray,
    n_buckets: int,
    epochs: int = 20,
    seed: int = 13,
) -> tuple[np.ndarray, np.ndarray]:
    """Averaged perceptron: <= ``epochs`` shuffled passes, stop at zero mistakes.

    Returns the averaged (weights, transitions).  Averaging uses the lazy
    accumulator trick: u collects step-weighted updates so the final average
    is w - u / steps without snapshotting weights per step.
    """
    if packed.n_sents == 0:
        raise ValueError("empty training set")
    weights = np.zeros((n_buckets, N_TAGS))
    transitions = np.zeros((N_TAGS, N_TAGS))
    if epochs <= 0:
        return weights, transitions

    u_w = np.zeros_like(weights)
    u_t = np.zeros_like(transitions)
    rng = np.random.default_rng(seed)
    starts = packed.sent_tok_starts
    fstarts = packed.tok_feat_starts
    step = 0

    for _ in range(epochs):
        order = rng.permutation(packed.n_sents)
        mistakes = 0
        trans_eff = effective_transitions(transitions)
        for si in order:
            stamp = float(step)
            step += 1
            t0, t1 = int(starts[si]), int(starts[si + 1])
            f0, f1 = int(fstarts[t0]), int(fstarts[t1])
            ids = packed.flat_ids[f0:f1]
            local_starts = fstarts[t0:t1] - f0
            emit = np.add.reduceat(weights[ids], local_starts, axis=0)
            pred = _decode_one(emit, trans_eff)
            gold = labels[t0:t1]
            if np.array_equal(pred, gold):
                continue
            mistakes += 1
            wrong = np.nonzero(pred != gold)[0]
            for t in wrong:
                tok_ids = packed.flat_ids[int(fstarts[t0 + t]): int(fstarts[t0 + t + 1])]
                np.add.at(weights[:, gold[t]], tok_ids, 1.0)
                np.add.at(weights[:, pred[t]], tok_ids, -1.0)
                np.add.at(u_w[:, gold[t]], tok_ids, stamp)
                np.add.at(u_w[:, pred[t]], tok_ids, -stamp)
            delta_t = _bigram_counts(gold) - _bigram_counts(pred)
            transitions += delta_t
            u_t += stamp * delta_t
            trans_eff = effective_transitions(transitions)
        if mistakes == 0:
            break

    if step == 0:
        return weights, transitions
    return weights - u_w / step, transitions - u_t / step
