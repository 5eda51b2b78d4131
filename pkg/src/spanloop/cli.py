"""Batch-mode command line driver for every pipeline stage.

Resolution order for shared settings is flag > environment (SPANLOOP_*) >
project config.json > built-in default.  Exit codes: 0 success, 1 validation
or pipeline failure, 2 usage error (argparse's convention).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .active import DensityCache, precompute_density, select_batch, vectorize_sentences
from .annotations import EntityType, IN_SCOPE_TYPES
from .corpus import (
    CorpusError,
    Document,
    SentencePool,
    deduplicate_sentences,
    ingest_documents,
    segment_sentences,
)
from .evaluation import (
    EvaluationError,
    cross_validate,
    cross_validation_csv,
    iaa_csv,
    iaa_report,
    stratified_kfold,
)
from .loop import LoopError, run_iteration
from .retrieval import (
    KeywordSet,
    RetrievalError,
    build_inverted_index,
    expand_keywords_iteration,
    init_keyword_set,
    load_default_stopwords,
    query_any_keyword,
    rank_candidate_keywords,
)
from .store import ProjectConfig, ProjectState, StoreError, init_project
from .synthetic import generate_corpus, write_corpus
from .taggers import TaggerModel, TaggerError
from .active import ActiveLearningError

ENV_PREFIX = "SPANLOOP_"


class CliError(Exception):
    """Validation failure: exit code 1."""


def _resolve(flag, env_name: str, config_value, default):
    """flag > env > config > default."""
    if flag is not None:
        return flag
    env = os.environ.get(ENV_PREFIX + env_name)
    if env is not None:
        return type(default)(env)
    if config_value is not None:
        return config_value
    return default


def _state(args) -> ProjectState:
    project = _resolve(getattr(args, "project", None), "PROJECT", None, "")
    if not project:
        raise CliError("no project directory given (flag --project or SPANLOOP_PROJECT)")
    return ProjectState(project)


def _write_docs(documents: list[Document], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for d in documents:
            f.write(json.dumps({"doc_id": d.doc_id, "source_tag": d.source_tag, "text": d.text},
                               sort_keys=True) + "\n")


def _read_docs(path: str) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                obj = json.loads(line)
                docs.append(Document(doc_id=obj["doc_id"], source_tag=obj["source_tag"], text=obj["text"]))
    return docs


def _read_sentences(path: str):
    from .corpus import Sentence

    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(Sentence.from_json(json.loads(line)))
    return out


# -- subcommand implementations --------------------------------------------------


def cmd_ingest(args) -> int:
    paths = list(args.paths)
    if args.dir:
        paths += sorted(str(q) for q in Path(args.dir).rglob("*.txt"))
    if args.manifest:
        groups: dict[str, list[str]] = {}
        with open(args.manifest, newline="", encoding="utf-8") as f:
            for row in csv.reader(f):
                if row and not row[0].startswith("#"):
                    groups.setdefault(row[1].strip(), []).append(row[0].strip())
        documents, errors = [], []
        for tag, paths in sorted(groups.items()):
            result = ingest_documents(paths, tag)
            documents += result.documents
            errors += result.errors
    else:
        if not paths:
            raise CliError("no input files (positional paths, --dir, or --manifest)")
        result = ingest_documents(paths, args.source_tag)
        documents, errors = result.documents, result.errors
    for path, reason in errors:
        print(f"skipped {path}: {reason}", file=sys.stderr)
    _write_docs(documents, args.out)
    print(f"ingested {len(documents)} documents ({len(errors)} skipped) -> {args.out}")
    return 0


def cmd_segment(args) -> int:
    sentences = []
    for doc in _read_docs(getattr(args, "in")):
        sentences += segment_sentences(doc)
    with open(args.out, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(json.dumps(s.to_json(), sort_keys=True) + "\n")
    print(f"segmented into {len(sentences)} sentences -> {args.out}")
    return 0


def cmd_dedupe(args) -> int:
    sentences = _read_sentences(getattr(args, "in"))
    pool = deduplicate_sentences(sentences)
    pool.save_jsonl(args.out)
    print(f"deduplicated {len(sentences)} -> {len(pool)} sentences -> {args.out}")
    return 0


def cmd_index(args) -> int:
    pool = SentencePool.load_jsonl(args.pool)
    index = build_inverted_index(pool)
    payload = {"pool_size": index.pool_size, "postings": {t: index.postings[t] for t in sorted(index.postings)}}
    Path(args.out).write_text(json.dumps(payload) + "\n", encoding="utf-8")
    print(f"indexed {index.pool_size} sentences, {len(index.postings)} terms -> {args.out}")
    return 0


def cmd_keywords_report(args) -> int:
    pool = SentencePool.load_jsonl(args.pool)
    ks = KeywordSet.load(args.keywords)
    index = build_inverted_index(pool)
    retrieved = query_any_keyword(index, ks)
    report = rank_candidate_keywords(retrieved, pool, ks, load_default_stopwords())
    top = report.top(args.top)
    if args.json:
        print(json.dumps({"retrieved": len(retrieved), "candidates": [
            {"term": t, "frequency": c} for t, c in top]}))
    else:
        print(f"{len(retrieved)} sentences retrieved with keyword set v{ks.version}")
        for term, count in top:
            print(f"{count:8d}  {term}")
    return 0


def cmd_keywords_accept(args) -> int:
    path = Path(args.keywords)
    terms = list(args.accept or [])
    if args.accept_file:
        terms += [t.strip() for t in Path(args.accept_file).read_text(encoding="utf-8").splitlines() if t.strip()]
    if path.exists():
        ks = KeywordSet.load(path)
        pool = SentencePool.load_jsonl(args.pool) if args.pool else None
        if pool is not None:
            index = build_inverted_index(pool)
        else:
            from .retrieval import InvertedIndex

            index = InvertedIndex(postings={}, pool_size=0)
        grown = expand_keywords_iteration(index, ks, load_default_stopwords(), terms)
        grown.save(path)
        print(f"keyword set v{ks.version} -> v{grown.version}: {len(ks.keywords)} -> {len(grown.keywords)} terms")
    else:
        if not terms:
            raise CliError("initializing a keyword set needs at least one term")
        ks = init_keyword_set(terms, load_default_stopwords())
        ks.save(path)
        print(f"initialized keyword set v{ks.version} with {len(ks.keywords)} terms -> {path}")
    return 0


def cmd_retrieve(args) -> int:
    pool = SentencePool.load_jsonl(args.pool)
    ks = KeywordSet.load(args.keywords)
    index = build_inverted_index(pool)
    hits = query_any_keyword(index, ks)
    with open(args.out, "w", encoding="utf-8") as f:
        for s in pool:
            if s.sentence_id in hits:
                f.write(json.dumps(s.to_json(), sort_keys=True) + "\n")
    print(f"retrieved {len(hits)} / {len(pool)} sentences -> {args.out}")
    return 0


def cmd_init(args) -> int:
    config = ProjectConfig(
        batch_size=args.batch_size,
        train_count=args.train_count,
        selection_beta=args.beta,
        epochs=args.epochs,
        hash_buckets=args.hash_buckets,
        seed=args.seed,
    )
    pool = SentencePool.load_jsonl(args.pool) if args.pool else None
    state = init_project(args.project, config=config, pool=pool)
    if args.keywords:
        KeywordSet.load(args.keywords).save(state.keywords_path)
    print(f"initialized project at {state.root}")
    return 0


def cmd_seed_import(args) -> int:
    state = _state(args)
    report = state.import_annotation_file(args.file, "gold", override=True)
    for sid, reason in report.rejected:
        print(f"rejected {sid}: {reason}", file=sys.stderr)
    print(f"seed import: {report.imported} gold annotations")
    return 0 if not report.rejected else 1


def cmd_select(args) -> int:
    state = _state(args)
    k = _resolve(args.k, "K", state.config.batch_size, 125)
    beta = _resolve(args.beta, "BETA", state.config.selection_beta, 1.0)
    pool = state.pool()
    gold = state.annotations("gold")
    unlabeled = [pool.get(sid) for sid in pool.ids() if sid not in gold]
    signal = EntityType(state.config.signal_etype)
    committee = []
    for kind in state.config.committee:
        path = state.model_path(signal, kind)
        if not path.exists():
            raise CliError(f"missing trained model {path}; run iterate or train first")
        committee.append(TaggerModel.load(path))
    if state.density_path.exists():
        cache = DensityCache.load(state.density_path)
        cache.validate_against(pool)
    else:
        cache = precompute_density(pool, vectorize_sentences(pool))
        cache.save(state.density_path)
    selection = select_batch(unlabeled, committee, cache, k=int(k), beta=float(beta),
                             iteration=state.current_iteration + 1)
    out = Path(args.out) if args.out else state.root / "selections" / "selection_preview.json"
    out.write_text(json.dumps(selection.to_json(), sort_keys=True) + "\n", encoding="utf-8")
    print(f"scored {len(selection.ranked)} sentences; top {len(selection.chosen)} -> {out}")
    return 0


def cmd_pretag_export(args) -> int:
    state = _state(args)
    batch = state.open_batch() if args.iteration is None else state.load_batch(args.iteration)
    if batch is None:
        raise CliError("no open batch to export")
    pretags = state.annotations("pretag")
    records = [pretags[sid].to_json() for sid in batch.sentence_ids if sid in pretags]
    Path(args.out).write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    print(f"exported {len(records)} pre-tagged sentences of iteration {batch.iteration} -> {args.out}")
    return 0


def cmd_import_annotations(args) -> int:
    state = _state(args)
    report = state.import_annotation_file(args.file, args.phase, override=args.override)
    for sid, reason in report.rejected:
        print(f"rejected {sid}: {reason}", file=sys.stderr)
    print(f"imported {report.imported} {args.phase} annotations ({len(report.rejected)} rejected)")
    return 0 if not report.rejected else 1


def cmd_iterate(args) -> int:
    state = _state(args)
    if args.history:
        records = state.iteration_records()
        if args.json:
            print(json.dumps([r.to_json() for r in records]))
        else:
            for r in records:
                f1 = ", ".join(f"{k}={v:.3f}" for k, v in sorted(r.validation_f1.items()))
                print(f"iteration {r.iteration}: labeled={r.labeled_count} "
                      f"unlabeled={r.unlabeled_count} selected={len(r.selected)} {f1}")
        return 0
    outcome = run_iteration(state)
    if args.json:
        payload = outcome.record.to_json()
        payload["terminal"] = outcome.terminal
        print(json.dumps(payload))
    elif outcome.terminal:
        print(f"iteration {outcome.record.iteration}: pool exhausted, terminal state")
    else:
        print(f"iteration {outcome.record.iteration}: selected {len(outcome.record.selected)} "
              f"sentences (labeled={outcome.record.labeled_count})")
    return 0


def cmd_train(args) -> int:
    from .annotations import spans_to_bio
    from .taggers import TrainConfig, train_tagger

    state = _state(args)
    gold = state.annotations("gold")
    if not gold:
        raise CliError("no gold annotations to train on")
    pool = state.pool()
    etype = EntityType(args.etype)
    items = [(pool.get(sid), gold[sid]) for sid in sorted(gold)]
    labeled = [(s, spans_to_bio(s, ann, etype)) for s, ann in items]
    cfg = TrainConfig(epochs=state.config.epochs, patience=state.config.patience,
                      l2=state.config.l2, seed=state.config.seed,
                      hash_buckets=state.config.hash_buckets)
    model = train_tagger(args.kind, etype, labeled, config=cfg)
    path = state.model_path(etype, args.kind)
    model.save(path)
    print(f"trained {args.kind} for {etype.value} on {len(labeled)} sentences -> {path}")
    return 0


def cmd_evaluate(args) -> int:
    from .taggers import TrainConfig

    state = _state(args)
    gold = state.annotations("gold")
    if not gold:
        raise CliError("no gold annotations to evaluate")
    pool = state.pool()
    items = [(pool.get(sid), gold[sid]) for sid in sorted(gold)]
    etypes = tuple(EntityType(e) for e in args.etypes) if args.etypes else IN_SCOPE_TYPES
    cfg = TrainConfig(epochs=state.config.epochs, patience=state.config.patience,
                      l2=state.config.l2, seed=state.config.seed,
                      hash_buckets=state.config.hash_buckets)
    results = cross_validate(items, args.kind, k=args.k, config=cfg, etypes=etypes, seed=args.seed)
    if args.out:
        cross_validation_csv(results, args.out)
        print(f"wrote {args.out}")
    if args.json:
        print(json.dumps({
            e.value: {"mean_f1": sum(s.f1 for s in scores) / len(scores),
                      "folds": [s.f1 for s in scores]}
            for e, scores in results.items()
        }))
    else:
        for e, scores in results.items():
            mean = sum(s.f1 for s in scores) / len(scores)
            print(f"{e.value}: mean exact F1 {mean:.4f} over {args.k} folds")
    return 0


def cmd_iaa(args) -> int:
    state = _state(args)
    gold = state.annotations("gold")
    blind = state.blind_by_annotator()
    annotators: dict[str, int] = {}
    for passes in blind.values():
        for name in passes:
            annotators[name] = annotators.get(name, 0) + 1
    if len(annotators) < 2:
        raise CliError("IAA needs blind passes from two annotators")
    a_name, b_name = sorted(annotators, key=lambda n: (-annotators[n], n))[:2]
    shared = [sid for sid in sorted(gold) if a_name in blind.get(sid, {}) and b_name in blind.get(sid, {})]
    if not shared:
        raise CliError("no sentences with gold plus both blind passes")
    table = iaa_report(
        {sid: blind[sid][a_name] for sid in shared},
        {sid: blind[sid][b_name] for sid in shared},
        {sid: gold[sid] for sid in shared},
    )
    if args.out:
        iaa_csv(table, args.out)
        print(f"wrote {args.out}")
    if args.json:
        print(json.dumps({f"{pair}|{etype.value}|{mode}": score.f1
                          for (pair, etype, mode), score in table.items()}))
    else:
        print(f"IAA over {len(shared)} sentences (A={a_name}, B={b_name})")
        for (pair, etype, mode), score in sorted(table.items(), key=lambda kv: str(kv[0])):
            print(f"{pair:12s} {etype.value:15s} {mode:8s} F1={score.f1:.4f}")
    return 0


def cmd_export(args) -> int:
    state = _state(args)
    folds = None
    if args.folds:
        gold = state.annotations("gold")
        pool = state.pool()
        items = [(pool.get(sid), gold[sid]) for sid in sorted(gold)]
        folds = stratified_kfold(items, k=args.folds, seed=args.seed)
    paths = state.export_dataset(args.out, fmt=args.format, folds=folds)
    counts = state.entity_count_summary()
    order = ["Action", "Mobility", "Assistance", "Quantification", "ScoreDefinition", "Total"]
    print(f"exported {counts['Sentences']} sentences -> {', '.join(str(p) for p in paths)}")
    print("  ".join(f"{name}={counts[name]}" for name in order))
    return 0


def cmd_serve(args) -> int:
    from .service import serve_forever

    state = _state(args)
    port = int(_resolve(args.port, "PORT", None, 8756))
    serve_forever(state, host=args.host, port=port)
    return 0


def cmd_synth_corpus(args) -> int:
    items = generate_corpus(args.n, seed=args.seed, relevant_fraction=args.relevant_fraction)
    pool_path, gold_path = write_corpus(items, args.out)
    n_entities = sum(len(a.spans) for _, a in items)
    print(f"generated {len(items)} sentences, {n_entities} entities -> {pool_path}, {gold_path}")
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spanloop",
        description="Human-in-the-loop engine for span-annotated NER corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read raw text files into a document file")
    p.add_argument("paths", nargs="*", help="input text files")
    p.add_argument("--dir", help="ingest every .txt under this directory tree")
    p.add_argument("--source-tag", default="corpus")
    p.add_argument("--manifest", help="CSV of path,source_tag rows")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("segment", help="split documents into tokenized sentences")
    p.add_argument("--in", dest="in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("dedupe", help="collapse duplicate sentences into a pool")
    p.add_argument("--in", dest="in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dedupe)

    p = sub.add_parser("index", help="build and save the inverted index")
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("keywords-report", help="rank candidate expansion keywords")
    p.add_argument("--pool", required=True)
    p.add_argument("--keywords", required=True)
    p.add_argument("--top", type=int, default=50)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_keywords_report)

    p = sub.add_parser("keywords-accept", help="initialize or expand the keyword set")
    p.add_argument("--keywords", required=True)
    p.add_argument("--pool", help="pool for index-based warnings")
    p.add_argument("--accept", action="append", help="term to accept (repeatable)")
    p.add_argument("--accept-file", help="file of terms, one per line")
    p.set_defaults(func=cmd_keywords_accept)

    p = sub.add_parser("retrieve", help="boolean-OR retrieval into a candidate pool")
    p.add_argument("--keywords", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("init", help="create a project directory")
    p.add_argument("--project", required=True)
    p.add_argument("--pool")
    p.add_argument("--keywords", help="keyword set to record in the project")
    p.add_argument("--batch-size", type=int, default=125)
    p.add_argument("--train-count", type=int, default=100)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--hash-buckets", type=int, default=2**22)
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("seed-import", help="import the manually annotated seed set")
    p.add_argument("--project")
    p.add_argument("--file", required=True)
    p.set_defaults(func=cmd_seed_import)

    p = sub.add_parser("select", help="score the pool and write a selection file")
    p.add_argument("--project")
    p.add_argument("--k", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("pretag-export", help="export the open batch's pre-tags")
    p.add_argument("--project")
    p.add_argument("--iteration", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pretag_export)

    p = sub.add_parser("import-annotations", help="import a standoff annotation file")
    p.add_argument("--project")
    p.add_argument("--file", required=True)
    p.add_argument("--phase", choices=["pretag", "blind", "gold"], required=True)
    p.add_argument("--override", action="store_true",
                   help="allow gold without two blind passes")
    p.set_defaults(func=cmd_import_annotations)

    p = sub.add_parser("iterate", help="run one loop iteration (or show --history)")
    p.add_argument("--project")
    p.add_argument("--history", action="store_true", help="print past iteration records")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("train", help="train one tagger on the gold set")
    p.add_argument("--project")
    p.add_argument("--kind", choices=["crf", "perceptron"], default="crf")
    p.add_argument("--etype", default="Action")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="cross-validated span F1 on the gold set")
    p.add_argument("--project")
    p.add_argument("--kind", choices=["crf", "perceptron"], default="crf")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--etypes", nargs="*")
    p.add_argument("--out", help="write the per-fold CSV here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("iaa", help="inter-annotator agreement report")
    p.add_argument("--project")
    p.add_argument("--out", help="write the CSV here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_iaa)

    p = sub.add_parser("export", help="export the gold dataset")
    p.add_argument("--project")
    p.add_argument("--format", choices=["standoff", "conll"], default="standoff")
    p.add_argument("--out", required=True)
    p.add_argument("--folds", type=int, help="also split into stratified folds")
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="serve the annotation HTTP API")
    p.add_argument("--project")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth-corpus", help="generate the synthetic evaluation corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=700)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--relevant-fraction", type=float, default=0.4)
    p.set_defaults(func=cmd_synth_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, CorpusError, RetrievalError, StoreError, LoopError,
            TaggerError, EvaluationError, ActiveLearningError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
