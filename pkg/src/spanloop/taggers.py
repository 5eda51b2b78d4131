"""Trainable sequence taggers behind one interface: CRF and averaged perceptron.

One model per entity type, three tags each (O, B, I).  Models are immutable
once trained; decoding is deterministic given the weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import crf
from .annotations import BioTagSequence, EntityType, TAGS
from .corpus import Sentence
from .features import FeatureExtractor, PackedSentences, pack_sentences
from .perceptron import train_perceptron

__all__ = ["TrainConfig", "TaggerModel", "train_tagger", "predict_tags", "TaggerError"]

TAG_TO_INDEX = {t: i for i, t in enumerate(TAGS)}
KINDS = ("crf", "perceptron")


class TaggerError(Exception):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    patience: int = 30
    l2: float = 1e-4
    lr: float = 2.0
    seed: int = 13
    hash_buckets: int = 2**22
    feature_seed: int = 1013

    def to_json(self) -> dict:
        return {
            "epochs": self.epochs,
            "patience": self.patience,
            "l2": self.l2,
            "lr": self.lr,
            "seed": self.seed,
            "hash_buckets": self.hash_buckets,
            "feature_seed": self.feature_seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> TrainConfig:
        return cls(**obj)


def labels_to_array(bios: list[BioTagSequence]) -> np.ndarray:
    return np.array([TAG_TO_INDEX[t] for bio in bios for t in bio.tags], dtype=np.int64)


@dataclass
class TaggerModel:
    """A trained tagger: hashed-feature weights plus a tag-transition matrix."""

    kind: str
    etype: EntityType
    weights: np.ndarray       # (hash_buckets, 3)
    transitions: np.ndarray   # (3, 3); BIO mask applied at decode time
    config: TrainConfig = field(default_factory=TrainConfig)

    FORMAT_VERSION = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TaggerError(f"unknown tagger kind {self.kind!r}")

    @property
    def extractor(self) -> FeatureExtractor:
        return FeatureExtractor(self.config.hash_buckets, self.config.feature_seed)

    def decode_packed(self, packed: PackedSentences) -> list[np.ndarray]:
        return crf.viterbi_packed(packed, self.weights, self.transitions)

    def decode(self, sentence: Sentence) -> BioTagSequence:
        return predict_tags(self, [sentence])[0]

    def save(self, path) -> None:
        np.savez_compressed(
            path,
            weights=self.weights,
            transitions=self.transitions,
            meta=np.array(
                json.dumps(
                    {
                        "format_version": self.FORMAT_VERSION,
                        "kind": self.kind,
                        "etype": self.etype.value,
                        "config": self.config.to_json(),
                    }
                )
            ),
        )

    @classmethod
    def load(cls, path) -> TaggerModel:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("format_version") != cls.FORMAT_VERSION:
                raise TaggerError(f"unsupported model format {meta.get('format_version')}")
            return cls(
                kind=meta["kind"],
                etype=EntityType(meta["etype"]),
                weights=data["weights"],
                transitions=data["transitions"],
                config=TrainConfig.from_json(meta["config"]),
            )


def train_tagger(
    kind: str,
    etype: EntityType,
    train: list[tuple[Sentence, BioTagSequence]],
    valid: list[tuple[Sentence, BioTagSequence]] | None = None,
    config: TrainConfig | None = None,
) -> TaggerModel:
    """Train one tagger for one entity type.

    CRF: full-batch descent with backtracking, early-stopped on validation
    span F1.  Perceptron: averaged, shuffled passes with a fixed seed.
    An epoch budget of zero returns the zero-weight model.
    """
    if kind not in KINDS:
        raise TaggerError(f"unknown tagger kind {kind!r}")
    if not train:
        raise TaggerError("empty training set")
    config = config or TrainConfig()
    extractor = FeatureExtractor(config.hash_buckets, config.feature_seed)

    for sentence, bio in list(train) + list(valid or []):
        if len(bio.tags) != len(sentence.tokens):
            raise TaggerError(f"label length mismatch for sentence {sentence.sentence_id}")
        if bio.etype != etype:
            raise TaggerError(f"label etype {bio.etype} != model etype {etype}")

    packed = pack_sentences([s for s, _ in train], extractor)
    labels = labels_to_array([b for _, b in train])

    if kind == "crf":
        packed_valid = valid_labels = None
        if valid:
            packed_valid = pack_sentences([s for s, _ in valid], extractor)
            valid_labels = labels_to_array([b for _, b in valid])
        weights, transitions = crf.train_crf(
            packed,
            labels,
            config.hash_buckets,
            packed_valid=packed_valid,
            valid_labels=valid_labels,
            epochs=config.epochs,
            patience=config.patience,
            l2=config.l2,
            lr=config.lr,
        )
    else:
        weights, transitions = train_perceptron(
            packed, labels, config.hash_buckets, epochs=config.epochs, seed=config.seed
        )
    return TaggerModel(kind=kind, etype=etype, weights=weights, transitions=transitions, config=config)


def predict_tags(model: TaggerModel, sentences: list[Sentence]) -> list[BioTagSequence]:
    """Batch Viterbi decode; independent of batch composition."""
    if not sentences:
        return []
    packed = pack_sentences(sentences, model.extractor)
    decoded = model.decode_packed(packed)
    return [
        BioTagSequence(etype=model.etype, tags=[TAGS[t] for t in tags])
        for tags in decoded
    ]
