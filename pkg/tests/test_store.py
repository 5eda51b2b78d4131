import json

import pytest

from spanloop.annotations import EntitySpan, EntityType, SentenceAnnotation
from spanloop.corpus import SentencePool
from spanloop.store import (
    IterationRecord,
    ProjectConfig,
    ProjectState,
    StoreError,
    init_project,
)
from spanloop.synthetic import generate_corpus

ACT = EntityType.ACTION


def seeded_project(tmp_path, n=30, config=None):
    items = generate_corpus(n, seed=21)
    pool = SentencePool()
    for s, _ in items:
        pool.add(s)
    state = init_project(tmp_path / "proj", config=config, pool=pool)
    return state, items


class TestInit:
    def test_fresh_directory(self, tmp_path):
        state = init_project(tmp_path / "proj")
        assert state.annotations("gold") == {}
        assert state.current_iteration == 0

    def test_non_empty_directory_refused(self, tmp_path):
        d = tmp_path / "proj"
        d.mkdir()
        (d / "junk.txt").write_text("x")
        with pytest.raises(StoreError):
            init_project(d)

    def test_config_persisted_verbatim(self, tmp_path):
        config = ProjectConfig(batch_size=125, selection_beta=1.0, epochs=42)
        state = init_project(tmp_path / "proj", config=config)
        reloaded = ProjectState(state.root)
        assert reloaded.config == config


class TestImport:
    def test_valid_gold_with_override(self, tmp_path):
        state, items = seeded_project(tmp_path)
        report = state.append_annotations("gold", [a for _, a in items[:25]], override=True)
        assert report.imported == 25 and report.rejected == []
        assert len(state.annotations("gold")) == 25

    def test_bad_offsets_rejected(self, tmp_path):
        state, items = seeded_project(tmp_path)
        sid = items[0][0].sentence_id
        bad = SentenceAnnotation(sid, [EntitySpan(0, 10_000, ACT)], "a", "gold")
        report = state.append_annotations("gold", [bad], override=True)
        assert report.imported == 0
        assert "OFFSET" in report.rejected[0][1]

    def test_unknown_sentence_rejected(self, tmp_path):
        state, _ = seeded_project(tmp_path)
        ghost = SentenceAnnotation("feedbeef00000000", [], "a", "blind")
        report = state.append_annotations("blind", [ghost])
        assert report.rejected == [("feedbeef00000000", "unknown sentence_id")]

    def test_gold_requires_two_blind_annotators(self, tmp_path):
        state, items = seeded_project(tmp_path)
        sentence, ann = items[0]
        gold = SentenceAnnotation(sentence.sentence_id, ann.spans, "adj", "gold")
        report = state.append_annotations("gold", [gold])
        assert report.imported == 0 and "two annotators" in report.rejected[0][1]

        for name in ("alice", "bob"):
            blind = SentenceAnnotation(sentence.sentence_id, ann.spans, name, "blind")
            assert state.append_annotations("blind", [blind]).imported == 1
        report = state.append_annotations("gold", [gold])
        assert report.imported == 1

    def test_import_file_array_and_jsonl(self, tmp_path):
        state, items = seeded_project(tmp_path)
        recs = [a.to_json() for _, a in items[:3]]
        array_path = tmp_path / "a.json"
        array_path.write_text(json.dumps(recs))
        assert state.import_annotation_file(array_path, "gold", override=True).imported == 3
        jsonl_path = tmp_path / "b.jsonl"
        jsonl_path.write_text("\n".join(json.dumps(r) for r in [a.to_json() for _, a in items[3:5]]))
        assert state.import_annotation_file(jsonl_path, "blind").imported == 2


class TestIterations:
    def test_sequential_accepted(self, tmp_path):
        state, _ = seeded_project(tmp_path)
        for i in (1, 2, 3):
            state.record_iteration(IterationRecord(iteration=i, selected=[], validation_f1={}))
        assert state.current_iteration == 3

    def test_repeat_rejected(self, tmp_path):
        state, _ = seeded_project(tmp_path)
        state.record_iteration(IterationRecord(iteration=1, selected=[], validation_f1={}))
        with pytest.raises(StoreError):
            state.record_iteration(IterationRecord(iteration=1, selected=[], validation_f1={}))

    def test_gap_rejected(self, tmp_path):
        state, _ = seeded_project(tmp_path)
        with pytest.raises(StoreError):
            state.record_iteration(IterationRecord(iteration=2, selected=[], validation_f1={}))

    def test_f1_trace_roundtrip(self, tmp_path):
        state, _ = seeded_project(tmp_path)
        rec = IterationRecord(
            iteration=1, selected=["abc"], validation_f1={"Action": 0.8125, "Mobility": 0.5}
        )
        state.record_iteration(rec)
        loaded = ProjectState(state.root).iteration_records()[0]
        assert loaded.validation_f1 == {"Action": 0.8125, "Mobility": 0.5}
        assert loaded.selected == ["abc"]


class TestExport:
    def test_empty_gold_rejected(self, tmp_path):
        state, _ = seeded_project(tmp_path)
        with pytest.raises(StoreError):
            state.export_dataset(tmp_path / "out")

    def test_standoff_roundtrip_byte_identical(self, tmp_path):
        state, items = seeded_project(tmp_path)
        state.append_annotations("gold", [a for _, a in items[:10]], override=True)
        out1 = state.export_dataset(tmp_path / "out1", fmt="standoff")[0]

        pool = SentencePool()
        for s, _ in items:
            pool.add(s)
        state2 = init_project(tmp_path / "proj2", pool=pool)
        state2.import_annotation_file(out1, "gold", override=True)
        out2 = state2.export_dataset(tmp_path / "out2", fmt="standoff")[0]
        assert out1.read_bytes() == out2.read_bytes()

    def test_conll_deterministic_and_wellformed(self, tmp_path):
        state, items = seeded_project(tmp_path)
        state.append_annotations("gold", [a for _, a in items[:5]], override=True)
        path = state.export_dataset(tmp_path / "out", fmt="conll")[0]
        text = path.read_text()
        again = state.export_dataset(tmp_path / "out_again", fmt="conll")[0].read_text()
        assert text == again
        blocks = [b for b in text.split("\n\n") if b.strip()]
        assert len(blocks) == 5
        n_cols = {len(line.split("\t")) for b in blocks for line in b.splitlines()}
        assert n_cols == {5}  # token + 4 in-scope types

    def test_entity_count_summary(self, tmp_path):
        state, items = seeded_project(tmp_path)
        state.append_annotations("gold", [a for _, a in items], override=True)
        counts = state.entity_count_summary()
        expected_actions = sum(
            1 for _, a in items for sp in a.spans if sp.etype == ACT
        )
        assert counts["Action"] == expected_actions
        assert counts["Total"] == sum(len(a.spans) for _, a in items)


class TestDurability:
    def test_replay_reconstructs_state(self, tmp_path):
        state, items = seeded_project(tmp_path)
        state.append_annotations("gold", [a for _, a in items[:8]], override=True)
        state.record_iteration(IterationRecord(iteration=1, selected=["x"], validation_f1={}))

        replayed = ProjectState(state.root)
        assert {
            sid: ann.to_json() for sid, ann in replayed.annotations("gold").items()
        } == {sid: ann.to_json() for sid, ann in state.annotations("gold").items()}
        assert replayed.current_iteration == state.current_iteration
        assert [r.to_json() for r in replayed.iteration_records()] == [
            r.to_json() for r in state.iteration_records()
        ]

    def test_truncated_final_line_quarantined(self, tmp_path):
        state, items = seeded_project(tmp_path)
        state.append_annotations("gold", [a for _, a in items[:3]], override=True)
        log = state.annotation_log("gold")
        with open(log, "a", encoding="utf-8") as f:
            f.write('{"sentence_id": "torn')  # no newline: torn write
        assert len(state.annotations("gold")) == 3

        state.append_annotations("gold", [items[3][1]], override=True)
        assert len(state.annotations("gold")) == 4
        quarantine = log.with_suffix(log.suffix + ".quarantine")
        assert quarantine.exists() and "torn" in quarantine.read_text()

    def test_mid_file_corruption_raises(self, tmp_path):
        state, items = seeded_project(tmp_path)
        state.append_annotations("gold", [a for _, a in items[:2]], override=True)
        log = state.annotation_log("gold")
        lines = log.read_text().splitlines()
        lines[0] = '{"broken'
        log.write_text("\n".join(lines) + "\n")
        with pytest.raises(StoreError, match="corrupt"):
            state.annotations("gold")

    def test_lock_excludes_second_writer(self, tmp_path):
        state, _ = seeded_project(tmp_path)
        with state.lock():
            with pytest.raises(StoreError, match="locked"):
                with state.lock():
                    pass
        with state.lock():
            pass  # released cleanly


def test_pool_immutable_once_written(tmp_path):
    state, items = seeded_project(tmp_path)
    with pytest.raises(StoreError):
        state.set_pool(SentencePool())
