"""In-memory active-learning experiments on corpora with known gold labels.

Runs the full query loop with a simulated annotator (the corpus generator's
gold spans stand in for human adjudication) and traces held-out F1 against
the number of labeled sentences.  Comparing the committee strategy to
uniform-random selection is how the engine's selection policy earns its keep.

Both arms are measured identically: train both committee members on the
current labeled set and report the better member's held-out F1, which is
what the pipeline would deploy.  Only the choice of the next batch differs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .active import precompute_density, select_batch, vectorize_sentences
from .annotations import EntityType, SentenceAnnotation, bio_to_spans, spans_to_bio
from .corpus import Sentence, SentencePool
from .evaluation import micro_prf
from .taggers import TrainConfig, predict_tags, train_tagger

__all__ = ["SimulationResult", "simulate_strategy", "compare_strategies"]

STRATEGIES = ("qbc_density", "random")

DEFAULT_CONFIG = TrainConfig(epochs=50, patience=10, l2=1e-3, hash_buckets=2**16)


@dataclass
class SimulationResult:
    strategy: str
    seed: int
    labeled_counts: list[int] = field(default_factory=list)
    f1_trace: list[float] = field(default_factory=list)

    def labeled_to_reach(self, target: float) -> float:
        """Labeled-set size at which the trace first meets the target (inf if never)."""
        for n, f1 in zip(self.labeled_counts, self.f1_trace):
            if f1 >= target:
                return float(n)
        return math.inf


def _heldout_f1(model, heldout, etype: EntityType) -> float:
    gold = {s.sentence_id: ann.spans_of(etype) for s, ann in heldout}
    preds = predict_tags(model, [s for s, _ in heldout])
    pred = {s.sentence_id: bio_to_spans(s, bio) for (s, _), bio in zip(heldout, preds)}
    return micro_prf(gold, pred, etype, "exact").f1


def _seed_ids(corpus, etype: EntityType, n_seed: int, rng: np.random.Generator) -> list[str]:
    """Curated starting set: mostly entity sentences plus a few negatives.

    A committee trained on positives alone agrees on everything shaped like
    them; a sprinkle of negatives gives the members something to genuinely
    disagree about from the first query round.
    """
    relevant = sorted(s.sentence_id for s, ann in corpus if ann.spans_of(etype))
    irrelevant = sorted(s.sentence_id for s, ann in corpus if not ann.spans_of(etype))
    n_neg = min(len(irrelevant), max(1, int(round(n_seed * 0.3))))
    n_pos = min(len(relevant), n_seed - n_neg)
    return list(rng.choice(relevant, size=n_pos, replace=False)) + list(
        rng.choice(irrelevant, size=n_neg, replace=False)
    )


def simulate_strategy(
    corpus: list[tuple[Sentence, SentenceAnnotation]],
    heldout: list[tuple[Sentence, SentenceAnnotation]],
    strategy: str,
    seed: int,
    n_seed: int = 20,
    k: int = 25,
    iterations: int = 8,
    beta: float = 1.0,
    etype: EntityType = EntityType.ACTION,
    config: TrainConfig | None = None,
) -> SimulationResult:
    """One arm of the experiment; returns the labeled-count vs. F1 trace.

    The seed set is identical for both strategies at a given experiment seed.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    config = config or DEFAULT_CONFIG
    rng = np.random.default_rng(seed)
    by_id = {s.sentence_id: (s, ann) for s, ann in corpus}

    seed_ids = _seed_ids(corpus, etype, n_seed, rng)
    labeled_ids = list(seed_ids)
    unlabeled_ids = [sid for s, _ in corpus if (sid := s.sentence_id) not in set(seed_ids)]

    cache = None
    if strategy == "qbc_density":
        pool = SentencePool()
        for s, _ in corpus:
            pool.add(s)
        cache = precompute_density(pool, vectorize_sentences(pool))

    result = SimulationResult(strategy=strategy, seed=seed)
    for it in range(iterations + 1):
        labeled = [by_id[sid] for sid in labeled_ids]
        data = [(s, spans_to_bio(s, ann, etype)) for s, ann in labeled]
        members = [train_tagger(kind, etype, data, config=config) for kind in ("crf", "perceptron")]
        f1 = max(_heldout_f1(m, heldout, etype) for m in members)
        result.labeled_counts.append(len(labeled_ids))
        result.f1_trace.append(f1)
        if it == iterations or not unlabeled_ids:
            break
        take = min(k, len(unlabeled_ids))
        if strategy == "qbc_density":
            selection = select_batch(
                [by_id[sid][0] for sid in unlabeled_ids], members, cache,
                k=take, beta=beta, iteration=it + 1,
            )
            chosen = selection.chosen
        else:
            chosen = [str(x) for x in rng.choice(unlabeled_ids, size=take, replace=False)]
        chosen_set = set(chosen)
        labeled_ids += chosen
        unlabeled_ids = [sid for sid in unlabeled_ids if sid not in chosen_set]
        assert len(labeled_ids) + len(unlabeled_ids) == len(corpus)
    return result


def compare_strategies(
    corpus,
    heldout,
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4),
    target_f1: float = 0.85,
    **kwargs,
) -> dict:
    """Both arms across seeds; a seed is a win when the committee strategy
    reaches the target and does so with no more labels than random selection."""
    outcomes = []
    for seed in seeds:
        qbc = simulate_strategy(corpus, heldout, "qbc_density", seed, **kwargs)
        rnd = simulate_strategy(corpus, heldout, "random", seed, **kwargs)
        need_qbc = qbc.labeled_to_reach(target_f1)
        need_rnd = rnd.labeled_to_reach(target_f1)
        outcomes.append(
            {
                "seed": seed,
                "qbc_labeled_to_target": need_qbc,
                "random_labeled_to_target": need_rnd,
                "win": math.isfinite(need_qbc) and need_qbc <= need_rnd,
                "qbc": qbc,
                "random": rnd,
            }
        )
    return {"outcomes": outcomes, "wins": sum(1 for o in outcomes if o["win"])}
