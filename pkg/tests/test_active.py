import math

import numpy as np
import pytest

from spanloop.active import (
    ActiveLearningError,
    DensityCache,
    SelectionResult,
    cosine_similarity,
    information_density,
    load_embedding_vectors,
    precompute_density,
    pretag_batch,
    select_batch,
    vectorize_sentences,
    vote_entropy,
)
from spanloop.annotations import BioTagSequence, EntityType
from spanloop.corpus import Sentence, SentencePool, sentence_id_for, tokenize
from spanloop.features import FeatureExtractor
from spanloop.taggers import TaggerModel, TrainConfig

WORDS = ["pt", "walks", "sits", "daily", "with", "walker", "stable", "gait", "rest", "exam"]


def sent(text):
    return Sentence(sentence_id=sentence_id_for(text), text=text, tokens=tokenize(text), doc_ids=set())


def make_pool(texts):
    pool = SentencePool()
    for t in texts:
        pool.add(sent(t))
    return pool


def hand_tfidf(pool):
    """Independent TF-IDF oracle: dense, smoothed idf, L2-normalized rows."""
    sentences = list(pool)
    vocab = sorted({t.lower() for s in sentences for t in s.token_strings()})
    n = len(sentences)
    df = {
        term: sum(1 for s in sentences if term in {t.lower() for t in s.token_strings()})
        for term in vocab
    }
    rows = []
    for s in sentences:
        counts = {}
        for t in s.token_strings():
            counts[t.lower()] = counts.get(t.lower(), 0) + 1
        vec = np.array(
            [counts.get(term, 0) * (math.log((1 + n) / (1 + df[term])) + 1) for term in vocab]
        )
        norm = np.linalg.norm(vec)
        rows.append(vec / norm if norm else vec)
    return {s.sentence_id: r for s, r in zip(sentences, rows)}


def trigger_model(words, etype=EntityType.ACTION, buckets=2**12):
    """Hand-set weights: tag listed trigger words B, everything else O."""
    cfg = TrainConfig(hash_buckets=buckets)
    fx = FeatureExtractor(buckets, cfg.feature_seed)
    W = np.zeros((buckets, 3))
    for w in words:
        W[fx._bucket(f"w0={w}"), 1] = 10.0
    return TaggerModel(kind="crf", etype=etype, weights=W, transitions=np.zeros((3, 3)), config=cfg)


def zero_model(etype=EntityType.ACTION, buckets=2**12):
    cfg = TrainConfig(hash_buckets=buckets)
    return TaggerModel(
        kind="perceptron", etype=etype, weights=np.zeros((buckets, 3)),
        transitions=np.zeros((3, 3)), config=cfg,
    )


class TestVectorize:
    def test_identical_sentences_identical_vectors(self):
        pool = make_pool(["pt walks daily", "gait stable"])
        vectors = vectorize_sentences(pool)
        a = vectors.row(pool.ids()[0])
        np.testing.assert_allclose(a, vectors.row(pool.ids()[0]))
        np.testing.assert_allclose(np.linalg.norm(a), 1.0, atol=1e-12)

    def test_disjoint_support_cosine_zero(self):
        pool = make_pool(["alpha one", "beta two"])
        vectors = vectorize_sentences(pool)
        ids = pool.ids()
        assert cosine_similarity(vectors.row(ids[0]), vectors.row(ids[1])) == 0.0

    def test_matches_hand_computed_tfidf(self):
        pool = make_pool(["walk fast", "walk slow", "sit still"])
        vectors = vectorize_sentences(pool)
        oracle = hand_tfidf(pool)
        for sid in pool.ids():
            got = np.sort(vectors.row(sid))[::-1]
            expected = np.sort(oracle[sid])[::-1]
            got = got[: len(expected)]
            np.testing.assert_allclose(
                got[got > 0], expected[expected > 0], atol=1e-12
            )

    def test_empty_pool_rejected(self):
        with pytest.raises(ActiveLearningError):
            vectorize_sentences(SentencePool())


class TestCosine:
    def test_identity(self):
        u = np.array([0.3, 0.4, 0.5])
        assert cosine_similarity(u, u) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_hand_value(self):
        got = cosine_similarity(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert got == pytest.approx(1 / math.sqrt(2), abs=1e-6)

    def test_zero_vector_warns(self):
        with pytest.warns(UserWarning):
            assert cosine_similarity(np.zeros(3), np.array([1.0, 0.0, 0.0])) == 0.0


class TestDensity:
    def test_identical_pool_density_one(self):
        # distinct doc ids but identical text collapse in the pool; use
        # near-identical sentences instead: same bag of words
        pool = make_pool(["walks walks pt", "pt walks walks"])
        cache = precompute_density(pool, vectorize_sentences(pool))
        for sid in pool.ids():
            assert cache.get(sid) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_pool_density_is_one_over_n(self):
        pool = make_pool(["alpha one", "beta two", "gamma three", "delta four"])
        cache = precompute_density(pool, vectorize_sentences(pool))
        for sid in pool.ids():
            assert cache.get(sid) == pytest.approx(1 / 4, abs=1e-9)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(17)
        texts = {" ".join(rng.choice(WORDS, size=rng.integers(2, 7))) for _ in range(40)}
        pool = make_pool(sorted(texts))
        vectors = vectorize_sentences(pool)
        cache = precompute_density(pool, vectors)
        ids = pool.ids()
        dense = {sid: vectors.row(sid) for sid in ids}
        for sid in ids:
            brute = np.mean([float(np.dot(dense[sid], dense[o])) for o in ids])
            assert cache.get(sid) == pytest.approx(brute, abs=1e-9)

    def test_stale_fingerprint_rejected(self):
        pool = make_pool(["pt walks", "gait stable"])
        cache = precompute_density(pool, vectorize_sentences(pool))
        grown = make_pool(["pt walks", "gait stable", "new sentence"])
        with pytest.raises(ActiveLearningError, match="stale"):
            cache.validate_against(grown)

    def test_cache_file_roundtrip(self, tmp_path):
        pool = make_pool(["pt walks", "gait stable"])
        cache = precompute_density(pool, vectorize_sentences(pool))
        path = tmp_path / "density.cache"
        cache.save(path)
        loaded = DensityCache.load(path)
        assert loaded.pool_fingerprint == cache.pool_fingerprint
        assert loaded.densities == cache.densities


def bio(etype, tags):
    return BioTagSequence(etype=etype, tags=tags)


class TestVoteEntropy:
    def test_full_agreement_zero(self):
        a = bio(EntityType.ACTION, ["O", "B", "O", "O"])
        b = bio(EntityType.ACTION, ["O", "B", "O", "O"])
        assert vote_entropy([a, b]) == 0.0

    def test_one_of_four_disagrees(self):
        a = bio(EntityType.ACTION, ["O", "B", "O", "O"])
        b = bio(EntityType.ACTION, ["O", "O", "O", "O"])
        assert vote_entropy([a, b]) == pytest.approx(math.log(2) / 4, abs=1e-12)

    def test_all_disagree(self):
        a = bio(EntityType.ACTION, ["B", "I", "I"])
        b = bio(EntityType.ACTION, ["O", "O", "O"])
        assert vote_entropy([a, b]) == pytest.approx(math.log(2), abs=1e-12)

    def test_length_mismatch_rejected(self):
        a = bio(EntityType.ACTION, ["O", "B"])
        b = bio(EntityType.ACTION, ["O"])
        with pytest.raises(ActiveLearningError):
            vote_entropy([a, b])

    def test_bounds_hold_on_random_committees(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            T = int(rng.integers(1, 30))
            preds = [
                bio(EntityType.ACTION, ["OBI"[i] for i in rng.integers(0, 3, size=T)])
                for _ in range(int(rng.integers(2, 5)))
            ]
            ve = vote_entropy(preds)
            assert 0.0 <= ve <= math.log(3) + 1e-12


class TestInformationDensity:
    def test_beta_zero_is_identity(self):
        assert information_density(0.1733, 0.5, 0.0) == 0.1733

    def test_product(self):
        assert information_density(0.1733, 0.5, 1.0) == pytest.approx(0.08665, abs=1e-6)

    def test_unit_density(self):
        for beta in (0.0, 0.5, 1.0, 2.0):
            assert information_density(0.42, 1.0, beta) == pytest.approx(0.42)


class TestSelectBatch:
    def make_fixture(self):
        texts = ["pt walks daily", "pt sits now", "gait stable", "exam unremarkable", "rest well"]
        pool = make_pool(texts)
        sentences = list(pool)
        cache = precompute_density(pool, vectorize_sentences(pool))
        return pool, sentences, cache

    def test_degenerate_tie_selects_first_k_by_id(self):
        pool, sentences, cache = self.make_fixture()
        committee = [zero_model(), zero_model()]
        result = select_batch(sentences, committee, cache, k=3)
        assert all(s.combined == 0.0 for s in result.ranked)
        assert result.chosen == sorted(pool.ids())[:3]

    def test_hand_scored_ranking(self):
        pool, sentences, cache = self.make_fixture()
        committee = [trigger_model(["walks", "sits"]), zero_model()]
        result = select_batch(sentences, committee, cache, k=2, beta=1.0)
        by_id = {s.sentence_id: s for s in result.ranked}
        for s in sentences:
            toks = [t.lower() for t in s.token_strings()]
            disagree = sum(1 for t in toks if t in ("walks", "sits"))
            expected_ve = disagree / len(toks) * math.log(2)
            assert by_id[s.sentence_id].vote_entropy == pytest.approx(expected_ve, abs=1e-12)
            assert by_id[s.sentence_id].combined == pytest.approx(
                expected_ve * cache.get(s.sentence_id), abs=1e-12
            )
        hand = sorted(
            ((-by_id[s.sentence_id].combined, s.sentence_id) for s in sentences)
        )
        assert result.chosen == [sid for _, sid in hand[:2]]

    def test_k_zero_empty(self):
        _, sentences, cache = self.make_fixture()
        result = select_batch(sentences, [zero_model(), zero_model()], cache, k=0)
        assert result.chosen == []

    def test_k_exceeding_pool_warns_and_selects_all(self):
        _, sentences, cache = self.make_fixture()
        with pytest.warns(UserWarning, match="exceeds pool"):
            result = select_batch(sentences, [zero_model(), zero_model()], cache, k=99)
        assert len(result.chosen) == len(sentences)

    def test_beta_zero_equals_pure_vote_entropy_ranking(self):
        _, sentences, cache = self.make_fixture()
        committee = [trigger_model(["walks", "sits", "stable"]), zero_model()]
        with_beta = select_batch(sentences, committee, cache, k=3, beta=0.0)
        pure = sorted(
            with_beta.ranked, key=lambda s: (-s.vote_entropy, s.sentence_id)
        )
        assert with_beta.chosen == [s.sentence_id for s in pure[:3]]

    def test_positive_scaling_leaves_chosen_set_unchanged(self):
        _, sentences, cache = self.make_fixture()
        committee = [trigger_model(["walks", "sits"]), zero_model()]
        base = select_batch(sentences, committee, cache, k=2, beta=1.0)
        scaled_cache = DensityCache(
            densities={k: 7.3 * v for k, v in cache.densities.items()},
            pool_fingerprint=cache.pool_fingerprint,
        )
        scaled = select_batch(sentences, committee, scaled_cache, k=2, beta=1.0)
        assert set(base.chosen) == set(scaled.chosen)

    def test_selection_file_roundtrip(self):
        _, sentences, cache = self.make_fixture()
        committee = [trigger_model(["walks"]), zero_model()]
        result = select_batch(sentences, committee, cache, k=2, iteration=3)
        again = SelectionResult.from_json(result.to_json())
        assert again.iteration == 3
        assert again.chosen == result.chosen
        assert [s.combined for s in again.ranked] == [s.combined for s in result.ranked]


class TestPretag:
    def test_zero_models_give_empty_spans(self):
        sentences = [sent("pt walks daily"), sent("gait stable")]
        models = {EntityType.ACTION: zero_model(), EntityType.MOBILITY: zero_model(EntityType.MOBILITY)}
        anns = pretag_batch(models, sentences)
        assert len(anns) == 2
        assert all(a.spans == [] and a.phase == "pretag" for a in anns)

    def test_trigger_model_tags_trigger_word(self):
        sentences = [sent("pt walks daily")]
        models = {EntityType.ACTION: trigger_model(["walks"])}
        anns = pretag_batch(models, sentences)
        assert len(anns[0].spans) == 1
        span = anns[0].spans[0]
        assert sentences[0].text[span.start:span.end] == "walks"
        assert span.etype == EntityType.ACTION

    def test_empty_batch(self):
        assert pretag_batch({EntityType.ACTION: zero_model()}, []) == []


def test_embedding_vectors_override(tmp_path):
    pool = make_pool(["pt walks", "gait stable", "rest well"])
    path = tmp_path / "embeddings.jsonl"
    rng = np.random.default_rng(4)
    import json

    with open(path, "w") as f:
        for sid in pool.ids():
            vec = rng.normal(size=5).tolist()
            f.write(json.dumps({"sentence_id": sid, "vector": vec}) + "\n")
    vectors = load_embedding_vectors(path, pool)
    np.testing.assert_allclose(np.linalg.norm(vectors.matrix, axis=1), 1.0, atol=1e-12)
    cache = precompute_density(pool, vectors)
    for sid in pool.ids():
        assert -1.0 - 1e-9 <= cache.get(sid) <= 1.0 + 1e-9


def test_embeddings_must_cover_pool(tmp_path):
    pool = make_pool(["pt walks", "gait stable"])
    path = tmp_path / "embeddings.jsonl"
    import json

    path.write_text(json.dumps({"sentence_id": pool.ids()[0], "vector": [1, 2]}) + "\n")
    with pytest.raises(ActiveLearningError, match="missing"):
        load_embedding_vectors(path, pool)
