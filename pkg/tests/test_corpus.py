import json

import pytest
from hypothesis import given, strategies as st

from spanloop.corpus import (
    CorpusError,
    Document,
    SentencePool,
    deduplicate_sentences,
    ingest_documents,
    normalize_text,
    segment_sentences,
    sentence_id_for,
    tokenize,
)


def doc(text, doc_id="t/doc.txt"):
    return Document(doc_id=doc_id, source_tag="t", text=text)


class TestIngest:
    def test_single_file_passthrough(self, tmp_path):
        p = tmp_path / "a.txt"
        p.write_text("Pt ambulates.")
        result = ingest_documents([p], "t")
        assert len(result.documents) == 1
        assert result.documents[0].text == "Pt ambulates."
        assert result.documents[0].doc_id == "t/a.txt"

    def test_empty_file_recorded_as_error(self, tmp_path):
        good = tmp_path / "good.txt"
        good.write_text("Pt walks.")
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        result = ingest_documents([good, empty], "t")
        assert len(result.documents) == 1
        assert len(result.errors) == 1
        assert result.errors[0][0].endswith("empty.txt")

    def test_sorted_path_order(self, tmp_path):
        for name in ["c.txt", "a.txt", "b.txt"]:
            (tmp_path / name).write_text(f"text of {name}")
        result = ingest_documents(
            [tmp_path / "c.txt", tmp_path / "a.txt", tmp_path / "b.txt"], "t"
        )
        assert [d.doc_id for d in result.documents] == ["t/a.txt", "t/b.txt", "t/c.txt"]

    def test_zero_documents_fatal(self, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        with pytest.raises(CorpusError):
            ingest_documents([empty], "t")

    def test_unreadable_file_collected(self, tmp_path):
        good = tmp_path / "good.txt"
        good.write_text("Pt walks.")
        result = ingest_documents([good, tmp_path / "missing.txt"], "t")
        assert len(result.documents) == 1
        assert len(result.errors) == 1


class TestSegmentation:
    def test_two_sentences(self):
        sents = segment_sentences(doc("He walks. She runs."))
        assert [s.text for s in sents] == ["He walks.", "She runs."]

    def test_no_terminal_punctuation(self):
        sents = segment_sentences(doc("no terminal punctuation"))
        assert [s.text for s in sents] == ["no terminal punctuation"]

    def test_abbreviation_guard(self):
        sents = segment_sentences(doc("Dr. Smith walked."))
        assert [s.text for s in sents] == ["Dr. Smith walked."]

    def test_newline_is_hard_break(self):
        sents = segment_sentences(doc("gait steady\nuses walker at home"))
        assert [s.text for s in sents] == ["gait steady", "uses walker at home"]

    def test_every_sentence_has_tokens(self):
        sents = segment_sentences(doc("A. B? C!\n\n  \nD"))
        assert all(len(s.tokens) >= 1 for s in sents)

    def test_question_and_exclamation(self):
        sents = segment_sentences(doc("Can he walk? Yes! He walks fine."))
        assert [s.text for s in sents] == ["Can he walk?", "Yes!", "He walks fine."]

    def test_offset_fidelity(self):
        sents = segment_sentences(doc("Pt ambulated 50 ft with walker. Gait steady."))
        for s in sents:
            for (a, b) in s.tokens:
                assert 0 <= a < b <= len(s.text)
                assert s.text[a:b].strip() == s.text[a:b]

    def test_coverage_of_document_text(self):
        text = "He walks. She runs.\nNo assist needed"
        sents = segment_sentences(doc(text))
        # Sentence texts, in order, reconstruct the document modulo whitespace.
        joined = " ".join(s.text for s in sents)
        assert normalize_text(joined) == normalize_text(text)


class TestTokenize:
    def test_words_and_punctuation(self):
        text = "Pt walks, unaided."
        toks = [text[a:b] for a, b in tokenize(text)]
        assert toks == ["Pt", "walks", ",", "unaided", "."]

    def test_intervals_strictly_increasing(self):
        toks = tokenize("a b  c,d")
        for (a1, b1), (a2, b2) in zip(toks, toks[1:]):
            assert b1 <= a2 and a1 < b1


class TestDedup:
    def test_exact_duplicates_collapse(self):
        sents = []
        for i, t in enumerate(["Pt walks.", "Pt walks.", "Pt sits."]):
            sents += segment_sentences(doc(t, doc_id=f"t/{i}.txt"))
        pool = deduplicate_sentences(sents)
        assert len(pool) == 2

    def test_normalization_merges_doc_ids(self):
        a = segment_sentences(doc("Pt  walks.", doc_id="t/a.txt"))
        b = segment_sentences(doc("pt walks.", doc_id="t/b.txt"))
        pool = deduplicate_sentences(a + b)
        assert len(pool) == 1
        merged = next(iter(pool))
        assert merged.doc_ids == {"t/a.txt", "t/b.txt"}

    def test_empty_input(self):
        assert len(deduplicate_sentences([])) == 0

    def test_idempotence(self):
        sents = segment_sentences(doc("He walks. She runs. He walks."))
        once = deduplicate_sentences(sents)
        twice = deduplicate_sentences(list(once))
        assert once.ids() == twice.ids()
        assert len(once) <= len(sents)

    def test_pool_jsonl_roundtrip_is_byte_identical(self, tmp_path):
        sents = segment_sentences(doc("He walks. She runs.\nGait steady."))
        pool = deduplicate_sentences(sents)
        p1 = tmp_path / "pool1.jsonl"
        p2 = tmp_path / "pool2.jsonl"
        pool.save_jsonl(p1)
        SentencePool.load_jsonl(p1).save_jsonl(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_manifest_deterministic_across_runs(self, tmp_path):
        text = "Pt ambulates. Pt ambulates.\nGait steady."
        out = []
        for run in range(2):
            pool = deduplicate_sentences(segment_sentences(doc(text)))
            path = tmp_path / f"run{run}.jsonl"
            pool.save_jsonl(path)
            out.append(path.read_bytes())
        assert out[0] == out[1]


@given(st.text(min_size=1, max_size=200))
def test_segment_tokens_within_bounds(text):
    for s in segment_sentences(doc(text)):
        assert len(s.tokens) >= 1
        last_end = 0
        for (a, b) in s.tokens:
            assert 0 <= a < b <= len(s.text)
            assert a >= last_end
            last_end = b


@given(st.lists(st.sampled_from(["Pt walks.", "pt  walks.", "Gait steady.", "PT WALKS."]), max_size=10))
def test_dedup_size_monotone_and_idempotent(texts):
    sents = []
    for i, t in enumerate(texts):
        sents += segment_sentences(doc(t, doc_id=f"t/{i}.txt"))
    pool = deduplicate_sentences(sents)
    assert len(pool) <= len(sents)
    again = deduplicate_sentences(list(pool))
    assert again.ids() == pool.ids()


def test_sentence_id_pure_function_of_normalized_text():
    assert sentence_id_for("Pt  Walks.") == sentence_id_for("pt walks.")
    assert sentence_id_for("pt walks.") != sentence_id_for("pt sits.")


def test_pool_json_shape(tmp_path):
    pool = deduplicate_sentences(segment_sentences(doc("Pt walks.")))
    path = tmp_path / "pool.jsonl"
    pool.save_jsonl(path)
    rec = json.loads(path.read_text().splitlines()[0])
    assert set(rec) == {"sentence_id", "text", "tokens", "doc_ids"}
