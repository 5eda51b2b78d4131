"""Score an unlabeled pool by density-weighted vote entropy and pick a batch.

Shows the three ingredients separately (votes, entropy, density) and then
the combined ranking that decides what annotators see next.
"""

import math

from spanloop.active import precompute_density, select_batch, vectorize_sentences, vote_entropy
from spanloop.annotations import EntityType
from spanloop.corpus import SentencePool
from spanloop.synthetic import generate_corpus, to_labeled
from spanloop.taggers import TrainConfig, predict_tags, train_tagger

corpus = generate_corpus(300, seed=21, relevant_fraction=0.3)
seed_items = [item for item in corpus if item[1].spans][:20]
rest = [item for item in corpus if item not in seed_items]

config = TrainConfig(epochs=40, hash_buckets=2**16, l2=1e-3)
labeled = to_labeled(seed_items, EntityType.ACTION)
committee = [
    train_tagger(kind, EntityType.ACTION, labeled, config=config)
    for kind in ("crf", "perceptron")
]

pool = SentencePool()
for s, _ in corpus:
    pool.add(s)
cache = precompute_density(pool, vectorize_sentences(pool))

# per-sentence vote entropy: ln(2) times the disagreeing-token fraction
sample = [s for s, _ in rest[:5]]
for s in sample:
    votes = [predict_tags(m, [s])[0] for m in committee]
    ve = vote_entropy(votes)
    print(f"ve={ve:.4f} (={ve / math.log(2):.2f} * ln2)  density={cache.get(s.sentence_id):.3f}  {s.text!r}")

selection = select_batch([s for s, _ in rest], committee, cache, k=10, beta=1.0, iteration=1)
print(f"\ntop {len(selection.chosen)} of {len(selection.ranked)} scored sentences:")
for score in selection.ranked[:10]:
    print(
        f"  combined={score.combined:.4f} ve={score.vote_entropy:.4f} "
        f"density={score.density:.3f}  {pool.get(score.sentence_id).text!r}"
    )
