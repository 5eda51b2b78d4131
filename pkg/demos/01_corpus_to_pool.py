"""From raw note files to a deduplicated sentence pool.

Writes a couple of clinical-style notes to a scratch directory, ingests
them, segments into sentences, and shows how duplicates collapse.
"""

import tempfile
from pathlib import Path

from spanloop.corpus import deduplicate_sentences, ingest_documents, segment_sentences

workdir = Path(tempfile.mkdtemp(prefix="spanloop_demo_"))

(workdir / "note_2019_001.txt").write_text(
    "Pt ambulated 50 feet with walker. Gait steady.\n"
    "Dr. Smith reviewed the plan. Pt tolerated well."
)
(workdir / "note_2020_107.txt").write_text(
    "Gait steady.\n"  # duplicate sentence reused across notes
    "Pt transferred bed to chair with min assist."
)

result = ingest_documents(sorted(workdir.glob("*.txt")), source_tag="demo")
print(f"ingested {len(result.documents)} documents, {len(result.errors)} errors")

sentences = []
for doc in result.documents:
    segs = segment_sentences(doc)
    print(f"\n{doc.doc_id}:")
    for s in segs:
        print(f"  [{s.sentence_id}] {s.text!r}  ({len(s.tokens)} tokens)")
    sentences += segs

pool = deduplicate_sentences(sentences)
print(f"\n{len(sentences)} sentences -> {len(pool)} after deduplication")
for s in pool:
    if len(s.doc_ids) > 1:
        print(f"merged duplicate: {s.text!r} appears in {sorted(s.doc_ids)}")

pool_path = workdir / "pool.jsonl"
pool.save_jsonl(pool_path)
print(f"\npool manifest written to {pool_path}")
