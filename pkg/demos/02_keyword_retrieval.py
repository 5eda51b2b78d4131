"""Iterative keyword expansion: grow a seed keyword set from what it retrieves.

The loop mirrors the downsizing procedure: query the index with the current
keywords, rank the content words of the retrieved sentences, accept the
promising ones, repeat.  Here the "operator" greedily accepts the top term.
"""

from spanloop.corpus import SentencePool
from spanloop.retrieval import (
    build_inverted_index,
    expand_keywords_iteration,
    init_keyword_set,
    load_default_stopwords,
    query_any_keyword,
    rank_candidate_keywords,
)
from spanloop.synthetic import generate_corpus

pool = SentencePool()
for sentence, _ in generate_corpus(400, seed=9):
    pool.add(sentence)
index = build_inverted_index(pool)
stopwords = load_default_stopwords()

ks = init_keyword_set(["walk", "ambulate"], stopwords)
print(f"seed keyword set v{ks.version}: {sorted(ks.keywords)}")

for round_no in range(3):
    retrieved = query_any_keyword(index, ks)
    report = rank_candidate_keywords(retrieved, pool, ks, stopwords)
    print(f"\nround {round_no + 1}: {len(retrieved)} sentences retrieved")
    print("top candidates:", report.top(5))
    if not report.entries:
        break
    accepted = [report.entries[0][0]]
    print(f"operator accepts: {accepted}")
    ks = expand_keywords_iteration(index, ks, stopwords, accepted)
    print(f"keyword set v{ks.version} now has {len(ks.keywords)} terms")

final = query_any_keyword(index, ks)
print(f"\nfinal pool downsized to {len(final)} / {len(pool)} candidate sentences")
