"""Linear-chain CRF over hashed features: scoring, inference, and training.

Everything runs in log space over padded sentence batches, so a training
epoch is a handful of vectorized passes rather than a Python loop per token.
The three-tag BIO scheme is hard-constrained: the O->I transition and an
initial I carry -inf score everywhere (decoding, partition function, and
marginals all honor the same mask), so every decoded sequence is valid BIO.
"""

from __future__ import annotations

import numpy as np

from .features import PackedSentences

__all__ = [
    "N_TAGS",
    "TAG_O",
    "TAG_B",
    "TAG_I",
    "TRANSITION_ALLOWED",
    "START_SCORE",
    "effective_transitions",
    "forward_backward",
    "marginals",
    "viterbi_packed",
    "crf_objective",
    "train_crf",
    "tag_runs",
    "span_f1_tags",
]

TAG_O, TAG_B, TAG_I = 0, 1, 2
N_TAGS = 3

# allowed[i, j]: may tag j follow tag i?  Only O->I is forbidden.
TRANSITION_ALLOWED = np.ones((N_TAGS, N_TAGS), dtype=bool)
TRANSITION_ALLOWED[TAG_O, TAG_I] = False

# A sequence may not start with I.
START_SCORE = np.array([0.0, 0.0, -np.inf])


class CrfError(Exception):
    pass


def effective_transitions(transitions: np.ndarray) -> np.ndarray:
    """Learned transition scores with the BIO mask applied."""
    return np.where(TRANSITION_ALLOWED, transitions, -np.inf)


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    """Log-sum-exp that tolerates -inf entries (all--inf rows stay -inf)."""
    m = np.max(x, axis=axis, keepdims=True)
    safe_m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(invalid="ignore"):
        out = np.log(np.sum(np.exp(x - safe_m), axis=axis)) + np.squeeze(safe_m, axis=axis)
    return np.where(np.isfinite(np.squeeze(m, axis=axis)), out, -np.inf)


def forward_backward(
    emissions: np.ndarray, lengths: np.ndarray, trans_eff: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched forward-backward over padded emissions.

    Returns (alpha, beta, logZ): alpha/beta are (B, T, n_tags) log messages,
    logZ is (B,).  Positions at or beyond a sentence's length are undefined
    and must not be read.
    """
    B, T, K = emissions.shape
    alpha = np.full((B, T, K), -np.inf)
    alpha[:, 0, :] = emissions[:, 0, :] + START_SCORE
    for t in range(1, T):
        prev = alpha[:, t - 1, :, None] + trans_eff[None, :, :]  # (B, K, K)
        alpha[:, t, :] = emissions[:, t, :] + _logsumexp(prev, axis=1)

    last = lengths - 1
    logZ = _logsumexp(alpha[np.arange(B), last, :], axis=1)

    beta = np.zeros((B, T, K))
    for t in range(T - 2, -1, -1):
        nxt = emissions[:, t + 1, :] + beta[:, t + 1, :]  # (B, K)
        scores = trans_eff[None, :, :] + nxt[:, None, :]  # (B, K, K)
        computed = _logsumexp(scores, axis=2)
        active = (t < last)[:, None]
        beta[:, t, :] = np.where(active, computed, 0.0)
    return alpha, beta, logZ


def marginals(
    emissions: np.ndarray, lengths: np.ndarray, trans_eff: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-position tag marginals, pairwise transition marginals, and logZ.

    Marginal rows at padded positions are zero; valid rows sum to 1.
    """
    B, T, K = emissions.shape
    alpha, beta, logZ = forward_backward(emissions, lengths, trans_eff)
    pos_valid = np.arange(T)[None, :] < lengths[:, None]

    log_m = alpha + beta - logZ[:, None, None]
    with np.errstate(invalid="ignore"):
        marg = np.where(pos_valid[:, :, None], np.exp(log_m), 0.0)

    pair = np.zeros((B, max(T - 1, 0), K, K))
    for t in range(T - 1):
        log_p = (
            alpha[:, t, :, None]
            + trans_eff[None, :, :]
            + (emissions[:, t + 1, :] + beta[:, t + 1, :])[:, None, :]
            - logZ[:, None, None]
        )
        with np.errstate(invalid="ignore"):
            pair[:, t] = np.where((t + 1 < lengths)[:, None, None], np.exp(log_p), 0.0)
    return marg, pair, logZ


def viterbi_packed(
    packed: PackedSentences, weights: np.ndarray, transitions: np.ndarray
) -> list[np.ndarray]:
    """Best valid BIO tag sequence per sentence; ties resolve to O < B < I."""
    if packed.n_sents == 0:
        return []
    emissions = packed.emissions(weights)
    trans_eff = effective_transitions(transitions)
    B, T, K = emissions.shape

    delta = np.full((B, T, K), -np.inf)
    bp = np.zeros((B, T, K), dtype=np.int64)
    delta[:, 0, :] = emissions[:, 0, :] + START_SCORE
    for t in range(1, T):
        scores = delta[:, t - 1, :, None] + trans_eff[None, :, :]  # (B, from, to)
        bp[:, t, :] = np.argmax(scores, axis=1)
        delta[:, t, :] = emissions[:, t, :] + np.max(scores, axis=1)

    out: list[np.ndarray] = []
    for b in range(B):
        L = int(packed.lengths[b])
        tags = np.zeros(L, dtype=np.int64)
        tags[L - 1] = int(np.argmax(delta[b, L - 1]))
        for t in range(L - 2, -1, -1):
            tags[t] = bp[b, t + 1, tags[t + 1]]
        out.append(tags)
    return out


def _empirical_transition_counts(labels: np.ndarray, starts: np.ndarray) -> np.ndarray:
    counts = np.zeros((N_TAGS, N_TAGS))
    prev = labels[:-1]
    nxt = labels[1:]
    # positions where a bigram crosses a sentence boundary are dropped
    boundary = np.zeros(len(labels) - 1, dtype=bool) if len(labels) > 1 else np.zeros(0, dtype=bool)
    for s in starts[1:-1]:
        if 0 < s <= len(boundary):
            boundary[s - 1] = True
    keep = ~boundary
    np.add.at(counts, (prev[keep], nxt[keep]), 1.0)
    return counts


def crf_objective(
    weights: np.ndarray,
    transitions: np.ndarray,
    packed: PackedSentences,
    labels: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Regularized negative conditional log-likelihood and its gradient.

    loss = sum_b [log Z_b - score(y_b)] + (l2/2) (||W||^2 + ||T||^2)
    grad = (expected - empirical feature counts) + l2 * params

    ``labels`` is the flat per-token gold tag array (valid BIO required).
    Raises CrfError when the loss comes out non-finite, which signals an
    invalid gold path or a numerical bug rather than a recoverable state.
    """
    if packed.n_tokens != len(labels):
        raise CrfError(f"{len(labels)} labels for {packed.n_tokens} tokens")
    trans_eff = effective_transitions(transitions)
    emissions = packed.emissions(weights)
    marg, pair, logZ = marginals(emissions, packed.lengths, trans_eff)

    tok_em = emissions[packed.tok_sent, packed.tok_pos]  # (n_tokens, K)
    gold_emit = tok_em[np.arange(packed.n_tokens), labels].sum()
    emp_trans = _empirical_transition_counts(labels, packed.sent_tok_starts)
    gold_trans = float((emp_trans * np.where(TRANSITION_ALLOWED, trans_eff, 0.0)).sum())
    if emp_trans[~TRANSITION_ALLOWED].any():
        raise CrfError("gold labels contain a forbidden transition (invalid BIO)")

    loss = float(logZ.sum() - gold_emit - gold_trans)
    loss += 0.5 * l2 * (float(np.dot(weights.ravel(), weights.ravel())) + float(np.dot(transitions.ravel(), transitions.ravel())))
    if not np.isfinite(loss):
        raise CrfError(f"non-finite loss {loss}")

    # emission gradient: expected minus empirical, pushed through the features
    tok_marg = marg[packed.tok_sent, packed.tok_pos]  # (n_tokens, K)
    diff = tok_marg.copy()
    diff[np.arange(packed.n_tokens), labels] -= 1.0
    grad_w = packed.scatter_token_values(diff, weights.shape[0])
    grad_w += l2 * weights

    grad_t = pair.sum(axis=(0, 1)) - emp_trans
    grad_t += l2 * transitions
    return loss, grad_w, grad_t


def tag_runs(tags: np.ndarray) -> set[tuple[int, int]]:
    """Half-open token-index runs of B I* in an integer tag sequence."""
    runs: set[tuple[int, int]] = set()
    start = None
    for i, t in enumerate(tags):
        if t == TAG_B:
            if start is not None:
                runs.add((start, i))
            start = i
        elif t == TAG_I:
            if start is None:
                start = i  # repaired orphan I
        else:
            if start is not None:
                runs.add((start, i))
                start = None
    if start is not None:
        runs.add((start, len(tags)))
    return runs


def span_f1_tags(gold: list[np.ndarray], pred: list[np.ndarray]) -> float:
    """Micro span-exact F1 between two tag-sequence lists (training metric)."""
    tp = fp = fn = 0
    for g, p in zip(gold, pred):
        gr, pr = tag_runs(g), tag_runs(p)
        tp += len(gr & pr)
        fp += len(pr - gr)
        fn += len(gr - pr)
    if tp == 0:
        return 0.0
    prec = tp / (tp + fp)
    rec = tp / (tp + fn)
    return 2 * prec * rec / (prec + rec)


def _split_labels(labels: np.ndarray, starts: np.ndarray) -> list[np.ndarray]:
    return [labels[starts[i]: starts[i + 1]] for i in range(len(starts) - 1)]


def train_crf(
    packed_train: PackedSentences,
    train_labels: np.ndarray,
    n_buckets: int,
    packed_valid: PackedSentences | None = None,
    valid_labels: np.ndarray | None = None,
    epochs: int = 100,
    patience: int = 30,
    l2: float = 1e-4,
    lr: float = 2.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Full-batch gradient descent with step-size halving on loss increase.

    Early-stops on validation span-F1 patience when a validation set is
    given, otherwise runs the fixed epoch budget.  Returns (weights,
    transitions) of the best-scoring epoch.
    """
    if packed_train.n_sents == 0:
        raise CrfError("empty training set")
    weights = np.zeros((n_buckets, N_TAGS))
    transitions = np.zeros((N_TAGS, N_TAGS))
    if epochs <= 0:
        return weights, transitions

    has_valid = packed_valid is not None and packed_valid.n_sents > 0
    if has_valid:
        valid_gold = _split_labels(valid_labels, packed_valid.sent_tok_starts)
    best_f1 = -1.0
    best = (weights.copy(), transitions.copy())
    stale = 0

    step = lr / packed_train.n_sents
    loss, grad_w, grad_t = crf_objective(weights, transitions, packed_train, train_labels, l2)
    for _ in range(epochs):
        improved = False
        for _ in range(40):
            w_try = weights - step * grad_w
            t_try = transitions - step * grad_t
            try:
                loss_try, gw_try, gt_try = crf_objective(
                    w_try, t_try, packed_train, train_labels, l2
                )
            except CrfError:
                loss_try = np.inf
            if loss_try <= loss:
                weights, transitions = w_try, t_try
                loss, grad_w, grad_t = loss_try, gw_try, gt_try
                step *= 1.5
                improved = True
                break
            step *= 0.5
        if not improved:
            break  # no descent direction at float precision

        if has_valid:
            pred = viterbi_packed(packed_valid, weights, transitions)
            f1 = span_f1_tags(valid_gold, pred)
            if f1 > best_f1:
                best_f1 = f1
                best = (weights.copy(), transitions.copy())
                stale = 0
            else:
                stale += 1
                if stale >= patience:
                    break
    if has_valid:
        return best
    return weights, transitions
