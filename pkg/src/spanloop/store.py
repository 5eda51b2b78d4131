"""Durable project state: append-only JSONL logs under one directory.

Layout::

    project/
      config.json          pool.jsonl        keywords.json
      annotations/{pretag,blind,gold}.jsonl
      models/              iterations.jsonl  density.cache
      selections/          batches/          lock (while a writer is open)

Logs are append-only; the authoritative in-memory state is whatever a full
replay of the files yields, so there is nothing to keep consistent besides
the files themselves.  A truncated final line (crash mid-append) is moved to
a .quarantine file on the next write and earlier records stay valid.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from .annotations import (
    AnnotationBatch,
    EntityType,
    IN_SCOPE_TYPES,
    SentenceAnnotation,
    conll_lines,
    validate_annotation,
)
from .corpus import SentencePool

__all__ = ["ProjectConfig", "IterationRecord", "ImportReport", "ProjectState", "StoreError", "init_project"]


class StoreError(Exception):
    pass


@dataclass
class ProjectConfig:
    batch_size: int = 125
    train_count: int = 100
    selection_beta: float = 1.0
    committee: tuple[str, ...] = ("crf", "perceptron")
    signal_etype: str = "Action"
    epochs: int = 100
    patience: int = 30
    l2: float = 1e-4
    hash_buckets: int = 2**22
    seed: int = 13
    max_iterations: int = 0  # 0: no budget, run until the pool is exhausted

    def to_json(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "train_count": self.train_count,
            "selection_beta": self.selection_beta,
            "committee": list(self.committee),
            "signal_etype": self.signal_etype,
            "epochs": self.epochs,
            "patience": self.patience,
            "l2": self.l2,
            "hash_buckets": self.hash_buckets,
            "seed": self.seed,
            "max_iterations": self.max_iterations,
        }

    @classmethod
    def from_json(cls, obj: dict) -> ProjectConfig:
        obj = dict(obj)
        obj["committee"] = tuple(obj.get("committee", ("crf", "perceptron")))
        return cls(**obj)


@dataclass
class IterationRecord:
    """Audit entry for one closed loop iteration (the per-iteration F1 trace)."""

    iteration: int
    selected: list[str]
    validation_f1: dict[str, float]
    annotators: list[str] = field(default_factory=list)
    labeled_count: int = 0
    unlabeled_count: int = 0
    timestamp: str = ""

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "selected": self.selected,
            "validation_f1": self.validation_f1,
            "annotators": self.annotators,
            "labeled_count": self.labeled_count,
            "unlabeled_count": self.unlabeled_count,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, obj: dict) -> IterationRecord:
        return cls(
            iteration=int(obj["iteration"]),
            selected=list(obj["selected"]),
            validation_f1=dict(obj["validation_f1"]),
            annotators=list(obj.get("annotators", [])),
            labeled_count=int(obj.get("labeled_count", 0)),
            unlabeled_count=int(obj.get("unlabeled_count", 0)),
            timestamp=obj.get("timestamp", ""),
        )


@dataclass
class ImportReport:
    imported: int
    rejected: list[tuple[str, str]]  # (sentence_id or record index, reason)


def _read_jsonl(path: Path) -> tuple[list[dict], str | None]:
    """Records plus any trailing fragment from a torn final write."""
    if not path.exists():
        return [], None
    raw = path.read_text(encoding="utf-8")
    records: list[dict] = []
    lines = raw.split("\n")
    tail = None
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError:
            if i == len(lines) - 1 and not raw.endswith("\n"):
                tail = line
            else:
                raise StoreError(f"corrupt record at {path}:{i + 1}")
    return records, tail


def _quarantine_tail(path: Path) -> None:
    records, tail = _read_jsonl(path)
    if tail is None:
        return
    qpath = path.with_suffix(path.suffix + ".quarantine")
    with open(qpath, "a", encoding="utf-8") as q:
        q.write(tail + "\n")
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def _append_jsonl(path: Path, records: list[dict]) -> None:
    _quarantine_tail(path)
    with open(path, "a", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
        f.flush()
        os.fsync(f.fileno())


def init_project(root: str | Path, config: ProjectConfig | None = None,
                 pool: SentencePool | None = None) -> "ProjectState":
    """Create the directory skeleton; refuses a non-empty directory."""
    root = Path(root)
    if root.exists() and any(root.iterdir()):
        raise StoreError(f"refusing to initialize non-empty directory {root}")
    config = config or ProjectConfig()
    (root / "annotations").mkdir(parents=True)
    (root / "models").mkdir()
    (root / "selections").mkdir()
    (root / "batches").mkdir()
    (root / "config.json").write_text(json.dumps(config.to_json(), indent=2) + "\n", encoding="utf-8")
    if pool is not None:
        pool.save_jsonl(root / "pool.jsonl")
    return ProjectState(root)


class ProjectState:
    """Handle on one project directory; all reads replay the logs."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        if not (self.root / "config.json").exists():
            raise StoreError(f"{self.root} is not a project directory")
        self.config = ProjectConfig.from_json(
            json.loads((self.root / "config.json").read_text(encoding="utf-8"))
        )
        self._pool: SentencePool | None = None

    # -- paths ---------------------------------------------------------------

    @property
    def pool_path(self) -> Path:
        return self.root / "pool.jsonl"

    def annotation_log(self, phase: str) -> Path:
        return self.root / "annotations" / f"{phase}.jsonl"

    @property
    def iterations_path(self) -> Path:
        return self.root / "iterations.jsonl"

    @property
    def density_path(self) -> Path:
        return self.root / "density.cache"

    @property
    def keywords_path(self) -> Path:
        return self.root / "keywords.json"

    def model_path(self, etype: EntityType, kind: str) -> Path:
        return self.root / "models" / f"{etype.value.lower()}_{kind}.npz"

    # -- locking ---------------------------------------------------------------

    def lock(self) -> "_ProjectLock":
        return _ProjectLock(self.root / "lock")

    # -- pool ---------------------------------------------------------------

    def set_pool(self, pool: SentencePool) -> None:
        if self.pool_path.exists():
            raise StoreError("pool already set; pools are immutable once written")
        pool.save_jsonl(self.pool_path)
        self._pool = None

    def pool(self) -> SentencePool:
        if self._pool is None:
            if not self.pool_path.exists():
                raise StoreError("project has no pool; run the ingest/retrieve steps first")
            self._pool = SentencePool.load_jsonl(self.pool_path)
        return self._pool

    # -- annotations ----------------------------------------------------------

    def annotations(self, phase: str) -> dict[str, SentenceAnnotation]:
        """Latest record per sentence for one phase (last write wins)."""
        records, _ = _read_jsonl(self.annotation_log(phase))
        out: dict[str, SentenceAnnotation] = {}
        for rec in records:
            ann = SentenceAnnotation.from_json(rec)
            out[ann.sentence_id] = ann
        return out

    def blind_annotators(self, sentence_id: str) -> set[str]:
        records, _ = _read_jsonl(self.annotation_log("blind"))
        return {r["annotator"] for r in records if r["sentence_id"] == sentence_id}

    def blind_by_annotator(self) -> dict[str, dict[str, SentenceAnnotation]]:
        """sentence_id -> annotator -> latest blind record."""
        records, _ = _read_jsonl(self.annotation_log("blind"))
        out: dict[str, dict[str, SentenceAnnotation]] = {}
        for rec in records:
            ann = SentenceAnnotation.from_json(rec)
            out.setdefault(ann.sentence_id, {})[ann.annotator] = ann
        return out

    def append_annotations(self, phase: str, annotations: list[SentenceAnnotation],
                           override: bool = False) -> ImportReport:
        """Validate and append records to a phase log.

        Rejections are per-record: unknown sentence ids, hard lint errors,
        and gold records lacking two prior blind passes (unless overridden).
        """
        if phase not in ("pretag", "blind", "gold"):
            raise StoreError(f"unknown phase {phase!r}")
        pool = self.pool()
        accepted: list[dict] = []
        rejected: list[tuple[str, str]] = []
        for ann in annotations:
            if ann.sentence_id not in pool:
                rejected.append((ann.sentence_id, "unknown sentence_id"))
                continue
            sentence = pool.get(ann.sentence_id)
            findings = validate_annotation(sentence, ann)
            hard = [f for f in findings if f.is_error]
            if hard:
                rejected.append((ann.sentence_id, "; ".join(f"{f.code}: {f.message}" for f in hard)))
                continue
            if phase == "gold" and not override:
                if len(self.blind_annotators(ann.sentence_id)) < 2:
                    rejected.append(
                        (ann.sentence_id, "gold requires blind passes from two annotators")
                    )
                    continue
            rec = ann.to_json()
            rec["phase"] = phase
            if findings:
                rec["lints"] = [{"code": f.code, "message": f.message} for f in findings]
            accepted.append(rec)
        if accepted:
            _append_jsonl(self.annotation_log(phase), accepted)
        return ImportReport(imported=len(accepted), rejected=rejected)

    def import_annotation_file(self, path: str | Path, phase: str, override: bool = False) -> ImportReport:
        """Standoff JSON import: a JSON array or one JSON object per line."""
        text = Path(path).read_text(encoding="utf-8").strip()
        if not text:
            return ImportReport(imported=0, rejected=[])
        if text.startswith("["):
            objs = json.loads(text)
        else:
            objs = [json.loads(line) for line in text.splitlines() if line.strip()]
        annotations = [SentenceAnnotation.from_json(o) for o in objs]
        return self.append_annotations(phase, annotations, override=override)

    # -- iterations -------------------------------------------------------------

    def iteration_records(self) -> list[IterationRecord]:
        records, _ = _read_jsonl(self.iterations_path)
        return [IterationRecord.from_json(r) for r in records]

    @property
    def current_iteration(self) -> int:
        records = self.iteration_records()
        return records[-1].iteration if records else 0

    def record_iteration(self, record: IterationRecord) -> None:
        expected = self.current_iteration + 1
        if record.iteration != expected:
            raise StoreError(
                f"iteration {record.iteration} out of order (expected {expected})"
            )
        if not record.timestamp:
            record.timestamp = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
        _append_jsonl(self.iterations_path, [record.to_json()])

    # -- selections and batches ---------------------------------------------------

    def save_selection(self, selection) -> Path:
        path = self.root / "selections" / f"selection_{selection.iteration:04d}.json"
        path.write_text(json.dumps(selection.to_json(), sort_keys=True) + "\n", encoding="utf-8")
        return path

    def load_selection(self, iteration: int):
        from .active import SelectionResult

        path = self.root / "selections" / f"selection_{iteration:04d}.json"
        if not path.exists():
            return None
        return SelectionResult.from_json(json.loads(path.read_text(encoding="utf-8")))

    def save_batch(self, batch: AnnotationBatch) -> Path:
        path = self.root / "batches" / f"batch_{batch.iteration:04d}.json"
        path.write_text(json.dumps(batch.to_json(), sort_keys=True) + "\n", encoding="utf-8")
        return path

    def load_batch(self, iteration: int) -> AnnotationBatch | None:
        path = self.root / "batches" / f"batch_{iteration:04d}.json"
        if not path.exists():
            return None
        return AnnotationBatch.from_json(json.loads(path.read_text(encoding="utf-8")))

    def open_batch(self) -> AnnotationBatch | None:
        """The most recent batch whose sentences are not yet all gold."""
        batches = sorted((self.root / "batches").glob("batch_*.json"))
        if not batches:
            return None
        batch = AnnotationBatch.from_json(json.loads(batches[-1].read_text(encoding="utf-8")))
        gold = self.annotations("gold")
        if all(sid in gold for sid in batch.sentence_ids):
            return None
        return batch

    # -- exports ---------------------------------------------------------------

    def entity_count_summary(self) -> dict[str, int]:
        gold = self.annotations("gold")
        counts = {e.value: 0 for e in EntityType}
        for ann in gold.values():
            for span in ann.spans:
                counts[span.etype.value] += 1
        counts["Total"] = sum(v for k, v in counts.items() if k != "Total")
        counts["Sentences"] = len(gold)
        return counts

    def export_dataset(self, out_dir: str | Path, fmt: str = "standoff",
                       etypes: tuple[EntityType, ...] = IN_SCOPE_TYPES,
                       folds=None) -> list[Path]:
        """Write the gold set deterministically ordered by sentence_id."""
        gold = self.annotations("gold")
        if not gold:
            raise StoreError("gold log is empty; nothing to export")
        pool = self.pool()
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        order = sorted(gold)

        def write_group(name: str, sids: list[str]) -> Path:
            if fmt == "standoff":
                path = out / f"{name}.standoff.jsonl"
                with open(path, "w", encoding="utf-8") as f:
                    for sid in sids:
                        f.write(json.dumps(gold[sid].to_json(), sort_keys=True) + "\n")
            elif fmt == "conll":
                path = out / f"{name}.conll"
                with open(path, "w", encoding="utf-8") as f:
                    for sid in sids:
                        for line in conll_lines(pool.get(sid), gold[sid], etypes):
                            f.write(line + "\n")
                        f.write("\n")
            else:
                raise StoreError(f"unknown export format {fmt!r}")
            return path

        if folds is None:
            return [write_group("gold", order)]
        return [
            write_group(f"fold_{i}", sorted(fold)) for i, fold in enumerate(folds.folds)
        ]


class _ProjectLock:
    """Advisory single-writer lock: the lock file holds the owner pid."""

    def __init__(self, path: Path):
        self.path = path

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            owner = self.path.read_text(encoding="utf-8").strip()
            raise StoreError(f"project is locked by pid {owner}")
        with os.fdopen(fd, "w") as f:
            f.write(str(os.getpid()))
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False
