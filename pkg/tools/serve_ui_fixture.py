"""Serve a throwaway project with one open, pre-tagged batch.

Builds a synthetic-corpus project in a temp directory, runs the first
iteration so a batch is open, then serves the annotation API on a free
port.  Prints "PORT <n>" once ready; used by the workbench's live
round-trip tests and handy for manual UI development.

Usage: python3 tools/serve_ui_fixture.py
"""

import sys
import tempfile
from pathlib import Path

from spanloop.corpus import SentencePool
from spanloop.loop import run_iteration
from spanloop.service import make_server
from spanloop.store import ProjectConfig, init_project
from spanloop.synthetic import generate_corpus


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="spanloop_ui_fixture_"))
    corpus = generate_corpus(120, seed=77, relevant_fraction=0.4)
    pool = SentencePool()
    for sentence, _ in corpus:
        pool.add(sentence)
    state = init_project(
        workdir / "project",
        config=ProjectConfig(batch_size=8, train_count=6, epochs=10, patience=4,
                             hash_buckets=2**12),
        pool=pool,
    )
    by_id = {s.sentence_id: ann for s, ann in corpus}
    seed = [by_id[s.sentence_id] for s, ann in corpus if ann.spans][:10]
    state.append_annotations("gold", seed, override=True)
    run_iteration(state)

    server, _ = make_server(state)
    print(f"PORT {server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


if __name__ == "__main__":
    sys.exit(main())
