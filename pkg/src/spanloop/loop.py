"""The retrain / re-score / select iteration over a durable project.

One call advances the project by one loop turn: consume the newly adjudicated
gold batch, retrain the committee and the per-type pre-tagging models, score
the remaining unlabeled pool, select and pre-tag the next batch, and append
the audit record.  The previous batch must be fully adjudicated first.
"""

from __future__ import annotations

from dataclasses import dataclass

from .active import (
    DensityCache,
    SelectionResult,
    precompute_density,
    pretag_batch,
    select_batch,
    vectorize_sentences,
)
from .annotations import (
    AnnotationBatch,
    EntityType,
    IN_SCOPE_TYPES,
    SentenceAnnotation,
    bio_to_spans,
    spans_to_bio,
)
from .corpus import Sentence
from .evaluation import micro_prf
from .store import IterationRecord, ProjectState
from .taggers import TaggerModel, TrainConfig, predict_tags, train_tagger

__all__ = ["IterationOutcome", "run_iteration", "LoopError"]


class LoopError(Exception):
    pass


@dataclass
class IterationOutcome:
    record: IterationRecord
    selection: SelectionResult | None
    terminal: bool


def _train_config(state: ProjectState) -> TrainConfig:
    cfg = state.config
    return TrainConfig(
        epochs=cfg.epochs,
        patience=cfg.patience,
        l2=cfg.l2,
        seed=cfg.seed,
        hash_buckets=cfg.hash_buckets,
    )


def _split_gold(
    state: ProjectState, gold: dict[str, SentenceAnnotation]
) -> tuple[list[str], list[str]]:
    """Train/validation ids per the batches' split hints; unhinted ids train."""
    hints: dict[str, str] = {}
    for i in range(1, state.current_iteration + 2):
        batch = state.load_batch(i)
        if batch:
            hints.update(batch.split_hint)
    train = [sid for sid in sorted(gold) if hints.get(sid, "train") == "train"]
    valid = [sid for sid in sorted(gold) if hints.get(sid) == "validation"]
    return train, valid


def _validation_f1(
    model: TaggerModel,
    etype: EntityType,
    valid_items: list[tuple[Sentence, SentenceAnnotation]],
) -> float:
    gold_spans = {s.sentence_id: ann.spans_of(etype) for s, ann in valid_items}
    preds = predict_tags(model, [s for s, _ in valid_items])
    pred_spans = {
        s.sentence_id: bio_to_spans(s, bio) for (s, _), bio in zip(valid_items, preds)
    }
    return micro_prf(gold_spans, pred_spans, etype, "exact").f1


def _density_cache(state: ProjectState) -> DensityCache:
    pool = state.pool()
    if state.density_path.exists():
        cache = DensityCache.load(state.density_path)
        cache.validate_against(pool)
        return cache
    cache = precompute_density(pool, vectorize_sentences(pool))
    cache.save(state.density_path)
    return cache


def run_iteration(state: ProjectState, etypes: tuple[EntityType, ...] = IN_SCOPE_TYPES) -> IterationOutcome:
    """Advance the project one iteration; see the module docstring.

    Raises LoopError while the current batch still has sentences awaiting
    gold adjudication (their ids are listed in the message).
    """
    with state.lock():
        open_batch = state.open_batch()
        if open_batch is not None:
            gold = state.annotations("gold")
            pending = [sid for sid in open_batch.sentence_ids if sid not in gold]
            raise LoopError(f"iteration open; {len(pending)} sentences pending gold: {pending[:5]}")

        budget = state.config.max_iterations
        if budget > 0 and state.current_iteration >= budget:
            raise LoopError(f"iteration budget ({budget}) reached")

        gold = state.annotations("gold")
        if not gold:
            raise LoopError("no gold annotations; import a seed set first")
        pool = state.pool()
        missing = [sid for sid in gold if sid not in pool]
        if missing:
            raise LoopError(f"gold ids missing from pool: {missing[:5]}")

        iteration = state.current_iteration + 1
        config = _train_config(state)
        signal_etype = EntityType(state.config.signal_etype)
        train_ids, valid_ids = _split_gold(state, gold)
        train_items = [(pool.get(sid), gold[sid]) for sid in train_ids]
        valid_items = [(pool.get(sid), gold[sid]) for sid in valid_ids]

        # committee on the disagreement signal type
        signal_train = [(s, spans_to_bio(s, ann, signal_etype)) for s, ann in train_items]
        signal_valid = [(s, spans_to_bio(s, ann, signal_etype)) for s, ann in valid_items]
        committee = [
            train_tagger(kind, signal_etype, signal_train, signal_valid, config)
            for kind in state.config.committee
        ]
        for model in committee:
            model.save(state.model_path(signal_etype, model.kind))

        # per-type pre-tagging models; the signal type reuses the committee
        validation_f1: dict[str, float] = {}
        pretag_models: dict[EntityType, TaggerModel] = {}
        for etype in etypes:
            if etype == signal_etype:
                candidates = committee
            else:
                labeled_train = [(s, spans_to_bio(s, ann, etype)) for s, ann in train_items]
                candidates = [train_tagger("crf", etype, labeled_train,
                                           [(s, spans_to_bio(s, ann, etype)) for s, ann in valid_items],
                                           config)]
                candidates[0].save(state.model_path(etype, "crf"))
            if valid_items:
                scores = [_validation_f1(m, etype, valid_items) for m in candidates]
                best = max(range(len(candidates)), key=lambda i: scores[i])
                validation_f1[etype.value] = scores[best]
            else:
                best = 0
            pretag_models[etype] = candidates[best]

        unlabeled = [pool.get(sid) for sid in pool.ids() if sid not in gold]
        record = IterationRecord(
            iteration=iteration,
            selected=[],
            validation_f1=validation_f1,
            annotators=sorted({ann.annotator for ann in gold.values()}),
            labeled_count=len(gold),
            unlabeled_count=len(unlabeled),
        )
        if not unlabeled:
            state.record_iteration(record)
            return IterationOutcome(record=record, selection=None, terminal=True)

        cache = _density_cache(state)
        selection = select_batch(
            unlabeled,
            committee,
            cache,
            k=state.config.batch_size,
            beta=state.config.selection_beta,
            iteration=iteration,
        )
        record.selected = list(selection.chosen)
        state.save_selection(selection)
        batch = AnnotationBatch.from_selection(
            iteration, selection.chosen, train_count=state.config.train_count
        )
        state.save_batch(batch)

        chosen_sentences = [pool.get(sid) for sid in selection.chosen]
        pretags = pretag_batch(pretag_models, chosen_sentences)
        state.append_annotations("pretag", pretags)

        state.record_iteration(record)
        return IterationOutcome(record=record, selection=selection, terminal=False)
