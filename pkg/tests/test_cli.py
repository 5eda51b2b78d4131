import json

import pytest

from spanloop.cli import main
from spanloop.corpus import SentencePool
from spanloop.synthetic import generate_corpus, write_corpus


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestUsage:
    def test_no_args_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["dedupe", "--nonsense"])
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2


class TestCorpusCommands:
    def test_ingest_segment_dedupe(self, tmp_path, capsys):
        (tmp_path / "a.txt").write_text("Pt walks. Pt walks.")
        (tmp_path / "b.txt").write_text("Gait steady today.")
        docs = tmp_path / "docs.jsonl"
        code, out, _ = run(capsys, "ingest", str(tmp_path / "a.txt"), str(tmp_path / "b.txt"),
                           "--source-tag", "notes", "--out", str(docs))
        assert code == 0 and "2 documents" in out

        sents = tmp_path / "sentences.jsonl"
        code, out, _ = run(capsys, "segment", "--in", str(docs), "--out", str(sents))
        assert code == 0 and "3 sentences" in out

        pool = tmp_path / "pool.jsonl"
        code, out, _ = run(capsys, "dedupe", "--in", str(sents), "--out", str(pool))
        assert code == 0 and "3 -> 2 sentences" in out
        assert len(SentencePool.load_jsonl(pool)) == 2

    def test_ingest_manifest(self, tmp_path, capsys):
        (tmp_path / "x.txt").write_text("One note.")
        manifest = tmp_path / "manifest.csv"
        manifest.write_text(f"{tmp_path / 'x.txt'},notes-2006\n")
        code, out, _ = run(capsys, "ingest", "--manifest", str(manifest),
                           "--out", str(tmp_path / "docs.jsonl"))
        assert code == 0
        rec = json.loads((tmp_path / "docs.jsonl").read_text().splitlines()[0])
        assert rec["doc_id"] == "notes-2006/x.txt"

    def test_ingest_nothing_fails(self, tmp_path, capsys):
        code, _, err = run(capsys, "ingest", "--out", str(tmp_path / "d.jsonl"))
        assert code == 1 and "error" in err


class TestRetrievalCommands:
    def setup_pool(self, tmp_path, capsys):
        pool = tmp_path / "pool.jsonl"
        (tmp_path / "a.txt").write_text("Pt walks with walker.\nGait steady.\nVitals stable.")
        run(capsys, "ingest", str(tmp_path / "a.txt"), "--out", str(tmp_path / "docs.jsonl"))
        run(capsys, "segment", "--in", str(tmp_path / "docs.jsonl"), "--out", str(tmp_path / "s.jsonl"))
        run(capsys, "dedupe", "--in", str(tmp_path / "s.jsonl"), "--out", str(pool))
        return pool

    def test_keyword_lifecycle(self, tmp_path, capsys):
        pool = self.setup_pool(tmp_path, capsys)
        kw = tmp_path / "keywords.json"

        code, out, _ = run(capsys, "keywords-accept", "--keywords", str(kw), "--accept", "walk")
        assert code == 0 and "initialized" in out

        code, out, _ = run(capsys, "keywords-report", "--pool", str(pool),
                           "--keywords", str(kw), "--top", "5", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["retrieved"] == 1
        assert any(c["term"] == "walker" for c in payload["candidates"])

        code, out, _ = run(capsys, "keywords-accept", "--keywords", str(kw),
                           "--pool", str(pool), "--accept", "gait")
        assert code == 0 and "v1 -> v2" in out

        candidates = tmp_path / "candidates.jsonl"
        code, out, _ = run(capsys, "retrieve", "--keywords", str(kw),
                           "--pool", str(pool), "--out", str(candidates))
        assert code == 0 and "retrieved 2 / 3" in out

    def test_index_command(self, tmp_path, capsys):
        pool = self.setup_pool(tmp_path, capsys)
        out_path = tmp_path / "index.json"
        code, out, _ = run(capsys, "index", "--pool", str(pool), "--out", str(out_path))
        assert code == 0
        payload = json.loads(out_path.read_text())
        assert payload["pool_size"] == 3
        assert "walker" in payload["postings"]

    def test_init_records_keywords_in_project(self, tmp_path, capsys):
        pool = self.setup_pool(tmp_path, capsys)
        kw = tmp_path / "kw.json"
        run(capsys, "keywords-accept", "--keywords", str(kw), "--accept", "walk")
        proj = tmp_path / "proj"
        code, _, _ = run(capsys, "init", "--project", str(proj), "--pool", str(pool),
                         "--keywords", str(kw))
        assert code == 0
        recorded = json.loads((proj / "keywords.json").read_text())
        assert "walk" in recorded["keywords"]


@pytest.fixture()
def project(tmp_path, capsys):
    """A CLI-initialized project on the synthetic corpus with a seed gold set."""
    items = generate_corpus(50, seed=51)
    pool_path, gold_path = write_corpus(items, tmp_path / "synth")
    proj = tmp_path / "proj"
    code, _, _ = run(capsys, "init", "--project", str(proj), "--pool", str(pool_path),
                     "--batch-size", "8", "--train-count", "6", "--epochs", "6",
                     "--hash-buckets", "4096")
    assert code == 0
    by_id = {s.sentence_id: ann for s, ann in items}
    seed = [by_id[s.sentence_id].to_json() for s, a in items if a.spans][:10]
    seed_file = tmp_path / "seed.json"
    seed_file.write_text(json.dumps(seed))
    code, out, _ = run(capsys, "seed-import", "--project", str(proj), "--file", str(seed_file))
    assert code == 0 and "10 gold" in out
    return proj, items, by_id, tmp_path


class TestLoopCommands:
    def test_iterate_pretag_import_cycle(self, project, capsys):
        proj, items, by_id, tmp_path = project
        code, out, _ = run(capsys, "iterate", "--project", str(proj), "--json")
        assert code == 0
        record = json.loads(out)
        assert record["iteration"] == 1 and len(record["selected"]) == 8

        pretag_file = tmp_path / "pretag.json"
        code, out, _ = run(capsys, "pretag-export", "--project", str(proj),
                           "--out", str(pretag_file))
        assert code == 0 and "8 pre-tagged" in out

        chosen = record["selected"]
        for annotator in ("alice", "bob"):
            blind = [
                dict(by_id[sid].to_json(), annotator=annotator, phase="blind")
                for sid in chosen
            ]
            blind_file = tmp_path / f"blind_{annotator}.json"
            blind_file.write_text(json.dumps(blind))
            code, out, _ = run(capsys, "import-annotations", "--project", str(proj),
                               "--file", str(blind_file), "--phase", "blind")
            assert code == 0 and "imported 8" in out

        gold = [dict(by_id[sid].to_json(), annotator="adj", phase="gold") for sid in chosen]
        gold_file = tmp_path / "gold.json"
        gold_file.write_text(json.dumps(gold))
        code, out, _ = run(capsys, "import-annotations", "--project", str(proj),
                           "--file", str(gold_file), "--phase", "gold")
        assert code == 0

        code, out, _ = run(capsys, "iterate", "--project", str(proj))
        assert code == 0 and "iteration 2" in out

        code, out, _ = run(capsys, "iterate", "--project", str(proj), "--history")
        assert code == 0
        assert "iteration 1" in out and "iteration 2" in out

    def test_iterate_blocked_while_open(self, project, capsys):
        proj, *_ = project
        assert run(capsys, "iterate", "--project", str(proj))[0] == 0
        code, _, err = run(capsys, "iterate", "--project", str(proj))
        assert code == 1 and "pending" in err

    def test_select_and_precedence(self, project, capsys, monkeypatch):
        proj, items, by_id, tmp_path = project
        run(capsys, "iterate", "--project", str(proj))

        out_file = tmp_path / "sel.json"
        code, _, _ = run(capsys, "select", "--project", str(proj), "--k", "3",
                         "--out", str(out_file))
        assert code == 0
        assert json.loads(out_file.read_text())["k"] == 3

        # env beats config (config batch_size=8), flag beats env
        monkeypatch.setenv("SPANLOOP_K", "5")
        run(capsys, "select", "--project", str(proj), "--out", str(out_file))
        assert json.loads(out_file.read_text())["k"] == 5
        run(capsys, "select", "--project", str(proj), "--k", "2", "--out", str(out_file))
        assert json.loads(out_file.read_text())["k"] == 2
        monkeypatch.delenv("SPANLOOP_K")
        run(capsys, "select", "--project", str(proj), "--out", str(out_file))
        assert json.loads(out_file.read_text())["k"] == 8  # config value

    def test_train_evaluate_iaa_export(self, project, capsys):
        proj, items, by_id, tmp_path = project
        code, out, _ = run(capsys, "train", "--project", str(proj), "--kind", "perceptron")
        assert code == 0 and "trained perceptron" in out

        code, out, _ = run(capsys, "evaluate", "--project", str(proj),
                           "--kind", "perceptron", "--k", "2", "--etypes", "Action", "--json")
        assert code == 0
        payload = json.loads(out)
        assert "Action" in payload and len(payload["Action"]["folds"]) == 2

        # two blind passes over the gold seed make IAA computable
        gold_ids = [s.sentence_id for s, a in items if a.spans][:10]
        for annotator in ("alice", "bob"):
            f = tmp_path / f"iaa_blind_{annotator}.json"
            f.write_text(json.dumps([
                dict(by_id[sid].to_json(), annotator=annotator, phase="blind")
                for sid in gold_ids
            ]))
            run(capsys, "import-annotations", "--project", str(proj),
                "--file", str(f), "--phase", "blind")
        iaa_csv = tmp_path / "iaa.csv"
        code, out, _ = run(capsys, "iaa", "--project", str(proj), "--out", str(iaa_csv), "--json")
        assert code == 0
        payload = json.loads(out.splitlines()[-1])
        assert payload["A vs B|Action|exact"] == 1.0
        assert iaa_csv.exists()

        code, out, _ = run(capsys, "export", "--project", str(proj),
                           "--format", "conll", "--out", str(tmp_path / "exp"))
        assert code == 0 and "Action=" in out

    def test_seed_import_rejection_exits_1(self, project, capsys, tmp_path):
        proj, *_ = project
        bad = tmp_path / "bad_seed.json"
        bad.write_text(json.dumps([{"sentence_id": "ffffffffffffffff", "spans": []}]))
        code, _, err = run(capsys, "seed-import", "--project", str(proj), "--file", str(bad))
        assert code == 1 and "unknown sentence_id" in err


class TestSynthCorpus:
    def test_generate(self, tmp_path, capsys):
        code, out, _ = run(capsys, "synth-corpus", "--out", str(tmp_path / "synth"),
                           "--n", "60", "--seed", "7")
        assert code == 0 and "60 sentences" in out
        assert (tmp_path / "synth" / "pool.jsonl").exists()
        assert (tmp_path / "synth" / "gold.jsonl").exists()

    def test_deterministic(self, tmp_path, capsys):
        run(capsys, "synth-corpus", "--out", str(tmp_path / "a"), "--n", "40", "--seed", "3")
        run(capsys, "synth-corpus", "--out", str(tmp_path / "b"), "--n", "40", "--seed", "3")
        assert (tmp_path / "a" / "pool.jsonl").read_bytes() == (tmp_path / "b" / "pool.jsonl").read_bytes()
        assert (tmp_path / "a" / "gold.jsonl").read_bytes() == (tmp_path / "b" / "gold.jsonl").read_bytes()


SERVICE_CAPABILITY_TO_CLI = {
    "nextBatch": "pretag-export",
    "adjudicationNext": "pretag-export",
    "submitBlind": "import-annotations",
    "submitGold": "import-annotations",
    "runIteration": "iterate",
    "metrics": "iterate",  # --history
    "sentence": "export",
    "schema": None,  # static contract file, nothing to drive
}


def test_cli_covers_every_service_capability(capsys):
    """Each HTTP capability has a headless CLI counterpart."""
    from spanloop.cli import build_parser
    from spanloop.service import api_schema

    parser = build_parser()
    subcommands = set()
    for action in parser._actions:
        if hasattr(action, "choices") and action.choices:
            subcommands |= set(action.choices)
    for capability, command in SERVICE_CAPABILITY_TO_CLI.items():
        assert capability in api_schema()["endpoints"]
        if command is not None:
            assert command in subcommands, f"{capability} has no CLI path"
