"""The full durable loop: seed, iterate, annotate, adjudicate, retrain, export.

Uses the synthetic generator's gold spans as a stand-in for the two human
annotators, so the whole two-phase workflow runs end to end on disk.
"""

import tempfile
from pathlib import Path

from spanloop.annotations import SentenceAnnotation
from spanloop.corpus import SentencePool
from spanloop.loop import run_iteration
from spanloop.store import ProjectConfig, init_project
from spanloop.synthetic import generate_corpus

workdir = Path(tempfile.mkdtemp(prefix="spanloop_loop_"))
corpus = generate_corpus(250, seed=33, relevant_fraction=0.35)
by_id = {s.sentence_id: ann for s, ann in corpus}

pool = SentencePool()
for s, _ in corpus:
    pool.add(s)

config = ProjectConfig(batch_size=15, train_count=12, epochs=25, hash_buckets=2**14)
state = init_project(workdir / "project", config=config, pool=pool)

# seed: a curator picks 20 relevant sentences and gold-annotates them directly
seed = [by_id[s.sentence_id] for s, ann in corpus if ann.spans][:20]
report = state.append_annotations("gold", seed, override=True)
print(f"seed imported: {report.imported} gold sentences")

for round_no in range(3):
    outcome = run_iteration(state)
    if outcome.terminal:
        print("pool exhausted")
        break
    rec = outcome.record
    f1 = ", ".join(f"{k}={v:.2f}" for k, v in sorted(rec.validation_f1.items()))
    print(f"\niteration {rec.iteration}: labeled={rec.labeled_count} "
          f"unlabeled={rec.unlabeled_count} selected={len(rec.selected)}  {f1}")

    # two blind passes then adjudication; the generator plays both annotators
    batch = state.open_batch()
    for annotator in ("alice", "bob"):
        blinds = [
            SentenceAnnotation(sid, list(by_id[sid].spans), annotator, "blind")
            for sid in batch.sentence_ids
        ]
        state.append_annotations("blind", blinds)
    golds = [
        SentenceAnnotation(sid, list(by_id[sid].spans), "alice+bob", "gold")
        for sid in batch.sentence_ids
    ]
    state.append_annotations("gold", golds)
    print(f"batch of {len(batch.sentence_ids)} adjudicated to gold")

paths = state.export_dataset(workdir / "export", fmt="conll")
counts = state.entity_count_summary()
print(f"\nexported {counts['Sentences']} gold sentences to {paths[0]}")
print("entity counts:", {k: v for k, v in counts.items() if k != "Sentences"})
print(f"\nproject directory: {state.root}")
for p in sorted(state.root.rglob("*")):
    if p.is_file():
        print("  ", p.relative_to(state.root))
