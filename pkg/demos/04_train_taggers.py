"""Train the two committee members on the synthetic corpus and compare them.

Both taggers share features and the BIO transition mask but learn very
differently, which is exactly why their disagreement carries signal.
"""

import time

from spanloop.annotations import EntityType, bio_to_spans
from spanloop.evaluation import micro_prf
from spanloop.synthetic import generate_corpus, to_labeled
from spanloop.taggers import TrainConfig, predict_tags, train_tagger

corpus = generate_corpus(700, seed=42)
train_items, test_items = corpus[:500], corpus[500:]
config = TrainConfig(epochs=60, hash_buckets=2**16, l2=1e-4)

labeled = to_labeled(train_items, EntityType.ACTION)
gold = {s.sentence_id: ann.spans_of(EntityType.ACTION) for s, ann in test_items}

for kind in ("crf", "perceptron"):
    started = time.time()
    model = train_tagger(kind, EntityType.ACTION, labeled, config=config)
    preds = predict_tags(model, [s for s, _ in test_items])
    pred = {
        s.sentence_id: bio_to_spans(s, bio) for (s, _), bio in zip(test_items, preds)
    }
    score = micro_prf(gold, pred, EntityType.ACTION, "exact")
    print(
        f"{kind:10s} trained in {time.time() - started:5.1f}s   "
        f"P={score.precision:.3f} R={score.recall:.3f} F1={score.f1:.3f}"
    )

# where do the two members disagree?
crf = train_tagger("crf", EntityType.ACTION, labeled, config=config)
perc = train_tagger("perceptron", EntityType.ACTION, labeled, config=config)
sentences = [s for s, _ in test_items]
crf_tags = predict_tags(crf, sentences)
perc_tags = predict_tags(perc, sentences)
disagreements = [
    s.text for s, a, b in zip(sentences, crf_tags, perc_tags) if a.tags != b.tags
]
print(f"\nmembers disagree on {len(disagreements)} / {len(sentences)} test sentences, e.g.:")
for text in disagreements[:5]:
    print("  ", text)
