"""End-to-end fitting of the two recognition pipelines.

``adaboost-dtw`` classifies with the boosted strong classifier itself;
``svm-boosted`` uses the boosted features only to build compact vectors for
an RBF margin classifier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boosting import BoostTrace, StrongClassifier, strong_classify, train_samme, weak_prediction_matrix
from .data import Dataset, DomainError, LandmarkSequence, ParseError, enumerate_pool
from .dtw import DtwConfig
from .normalization import (
    DEFAULT_TRAIN_FRAMES,
    NeutralReference,
    compute_neutral_reference,
    normalize_dataset,
    normalize_sequence,
    resample_sequence,
)
from .prototypes import PrototypeSet, prototypes_from_features, training_features
from .svm import MarginModel, compact_features, train_margin_model

PIPELINES = ("adaboost-dtw", "svm-boosted")
FORMAT = "geofer.model"
VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    kind: str = "adaboost-dtw"
    rounds: int = 50
    dtw: DtwConfig = DtwConfig()
    train_frames: int = DEFAULT_TRAIN_FRAMES
    svm_grid: dict | None = None
    svm_folds: int = 3
    use_abs: bool = False
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.kind not in PIPELINES:
            raise DomainError(f"unknown pipeline {self.kind!r}; choose from {PIPELINES}")
        if self.rounds < 1:
            raise DomainError("rounds must be >= 1")


@dataclass(eq=False)
class Model:
    kind: str
    class_names: tuple[str, ...]
    reference: NeutralReference
    strong: StrongClassifier
    dtw: DtwConfig = DtwConfig()
    train_frames: int = DEFAULT_TRAIN_FRAMES
    use_abs: bool = False
    margin: MarginModel | None = None
    trace: BoostTrace | None = None
    prototypes: PrototypeSet | None = field(default=None, repr=False)  # full pool, not serialized

    @property
    def features(self):
        return self.strong.features

    def predict_one(self, seq: LandmarkSequence) -> int:
        x = normalize_sequence(seq, self.reference)
        if self.kind == "svm-boosted":
            return int(self.margin.predict(compact_features(x, self.features, self.use_abs)[None])[0])
        return strong_classify(x, self.strong, self.dtw)

    def predict(self, seqs: Sequence[LandmarkSequence]) -> np.ndarray:
        return np.array([self.predict_one(s) for s in seqs], dtype=np.int64)

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "pipeline": self.kind,
            "class_names": list(self.class_names),
            "num_landmarks": len(self.reference),
            "train_frames": self.train_frames,
            "dtw": self.dtw.to_json(),
            "use_abs": self.use_abs,
            "neutral_reference": self.reference.to_json(),
            "strong_classifier": self.strong.to_json(),
            "margin_model": None if self.margin is None else self.margin.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> "Model":
        if obj.get("format") != FORMAT or obj.get("version") != VERSION:
            raise ParseError(f"not a {FORMAT} v{VERSION} document")
        return cls(
            kind=obj["pipeline"],
            class_names=tuple(obj["class_names"]),
            reference=NeutralReference.from_json(obj["neutral_reference"]),
            strong=StrongClassifier.from_json(obj["strong_classifier"]),
            dtw=DtwConfig.from_json(obj["dtw"]),
            train_frames=int(obj["train_frames"]),
            use_abs=bool(obj["use_abs"]),
            margin=None if obj["margin_model"] is None else MarginModel.from_json(obj["margin_model"]),
        )

    @classmethod
    def load(cls, path) -> "Model":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def fit_pipeline(train: Dataset, config: PipelineConfig = PipelineConfig()) -> Model:
    """Fit reference, prototypes, boosting (and the margin model) on ``train`` only."""
    train.require_trainable()
    y = train.labels
    ref = compute_neutral_reference(train)
    normalized = normalize_dataset(train, ref)
    resampled = [resample_sequence(s, config.train_frames) for s in normalized]
    pool = enumerate_pool(train.num_landmarks)
    feats = training_features(resampled, pool)
    protos = prototypes_from_features(feats, y, pool, train.class_names)
    preds = weak_prediction_matrix(list(feats), protos.table, config.dtw, config.threads)
    strong, trace = train_samme(resampled, pool, protos, config.rounds, config.dtw, predictions=preds)
    margin = None
    if config.kind == "svm-boosted":
        X = np.stack([compact_features(s, strong.features, config.use_abs) for s in normalized])
        margin = train_margin_model(X, y, config.svm_grid, config.svm_folds, config.seed, config.threads)
    return Model(
        kind=config.kind,
        class_names=train.class_names,
        reference=ref,
        strong=strong,
        dtw=config.dtw,
        train_frames=config.train_frames,
        use_abs=config.use_abs,
        margin=margin,
        trace=trace,
        prototypes=protos,
    )
