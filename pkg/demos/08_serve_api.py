"""Drive the annotation HTTP API end to end against an in-process server.

The same endpoints back the browser workbench; here plain urllib plays the
role of two annotators and an adjudicator for one batch.
"""

import json
import tempfile
import threading
import urllib.request
from pathlib import Path

from spanloop.corpus import SentencePool
from spanloop.loop import run_iteration
from spanloop.service import make_server
from spanloop.store import ProjectConfig, init_project
from spanloop.synthetic import generate_corpus

workdir = Path(tempfile.mkdtemp(prefix="spanloop_api_"))
corpus = generate_corpus(150, seed=5, relevant_fraction=0.35)
by_id = {s.sentence_id: ann for s, ann in corpus}
pool = SentencePool()
for s, _ in corpus:
    pool.add(s)

state = init_project(workdir / "project",
                     config=ProjectConfig(batch_size=8, train_count=6, epochs=20,
                                          hash_buckets=2**14),
                     pool=pool)
seed = [by_id[s.sentence_id] for s, ann in corpus if ann.spans][:15]
state.append_annotations("gold", seed, override=True)
run_iteration(state)

server, _service = make_server(state)
port = server.server_address[1]
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{port}"
print(f"serving on {base}")


def get(path):
    with urllib.request.urlopen(base + path) as resp:
        return json.loads(resp.read())


def post(path, payload):
    req = urllib.request.Request(
        base + path, data=json.dumps(payload).encode(), method="POST",
        headers={"Content-Type": "application/json"},
    )
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


batch = get("/api/batch/next?annotator_id=alice")
print(f"batch of {len(batch['sentences'])} sentences, iteration {batch['iteration']}")
first = batch["sentences"][0]
print(f"first sentence: {first['text']!r} with {len(first['spans'])} pre-tagged spans")

records = [
    {"sentence_id": item["sentence_id"], "spans": [s.to_json() for s in by_id[item["sentence_id"]].spans]}
    for item in batch["sentences"]
]
for annotator in ("alice", "bob"):
    ack = post("/api/annotations/blind", {"annotator_id": annotator, "annotations": records})
    print(f"{annotator}: accepted {ack['accepted']} blind annotations")

adj = get("/api/adjudication/next?annotator_id=carol")
proposals = sum(1 for item in adj["sentences"] if item["proposal"] is not None)
print(f"adjudication view: {len(adj['sentences'])} sentences, {proposals} auto-proposals (A==B)")

ack = post("/api/annotations/gold", {"annotator_id": "carol", "annotations": records})
print(f"gold accepted {ack['accepted']}, batch closeable: {ack['batch_closeable']}")

summary = post("/api/iteration/run", {})
print(f"iteration {summary['iteration']} ran: status={summary['status']}, "
      f"validation F1 {summary['validation_f1']}")

metrics = get("/api/metrics")
print(f"metrics: {len(metrics['iterations'])} iteration records, "
      f"entity counts {metrics['entity_counts']}")

server.shutdown()
server.server_close()
