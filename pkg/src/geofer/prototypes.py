"""Per-class prototype feature vectors from elementwise medians."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import DomainError, FeatureId, ParseError, PreconditionError, SchemaError, _frozen
from .features import FeatureVector, feature_matrix
from .normalization import NormalizedSequence

FORMAT = "geofer.prototypes"
VERSION = 1


@dataclass(frozen=True, eq=False)
class PrototypeSet:
    """Prototype table of shape ``(K, len(pool), frame_count, 2)``."""

    table: np.ndarray
    pool: tuple[FeatureId, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        table = _frozen(self.table)
        pool = tuple(self.pool)
        names = tuple(self.class_names)
        if table.ndim != 4 or table.shape[3] != 2:
            raise SchemaError(f"prototype table must be (K, P, T, 2), got {table.shape}")
        if table.shape[0] != len(names) or table.shape[1] != len(pool):
            raise SchemaError("prototype table does not match classes and pool")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "pool", pool)
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "_index", {f: k for k, f in enumerate(pool)})

    @property
    def num_classes(self) -> int:
        return self.table.shape[0]

    @property
    def frame_count(self) -> int:
        return self.table.shape[2]

    def __contains__(self, fid):
        return fid in self._index

    def feature_index(self, fid: FeatureId) -> int:
        try:
            return self._index[fid]
        except KeyError:
            raise DomainError(f"no prototype for feature {fid}") from None

    def vectors(self, fid: FeatureId) -> list[FeatureVector]:
        """The ``K`` class prototypes for one feature."""
        k = self.feature_index(fid)
        return [FeatureVector(fid, self.table[c, k]) for c in range(self.num_classes)]

    def get(self, c: int, fid: FeatureId) -> FeatureVector:
        return FeatureVector(fid, self.table[c, self.feature_index(fid)])

    def restrict(self, fids: Sequence[FeatureId]) -> "PrototypeSet":
        idx = [self.feature_index(f) for f in fids]
        return PrototypeSet(self.table[:, idx], tuple(fids), self.class_names)

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "frame_count": self.frame_count,
            "features": [str(f) for f in self.pool],
            "prototypes": {
                name: {str(f): self.table[c, k].tolist() for k, f in enumerate(self.pool)}
                for c, name in enumerate(self.class_names)
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PrototypeSet":
        if obj.get("format") != FORMAT or obj.get("version") != VERSION:
            raise ParseError(f"not a {FORMAT} v{VERSION} document")
        pool = tuple(FeatureId.parse(s) for s in obj["features"])
        names = tuple(obj["prototypes"])
        table = np.array(
            [[obj["prototypes"][n][str(f)] for f in pool] for n in names], dtype=np.float64
        ).reshape(len(names), len(pool), int(obj["frame_count"]), 2)
        return cls(table, pool, names)


def prototypes_from_features(features: np.ndarray, labels: np.ndarray, pool: Sequence[FeatureId],
                             class_names: Sequence[str]) -> PrototypeSet:
    """Median prototypes from a precomputed ``(n, P, T, 2)`` feature tensor."""
    labels = np.asarray(labels)
    K = len(class_names)
    table = np.empty((K,) + features.shape[1:])
    for c in range(K):
        members = features[labels == c]
        if len(members) == 0:
            raise PreconditionError(f"class {class_names[c]!r} has no training sequences")
        # np.median averages the two central order statistics for even counts
        table[c] = np.median(members, axis=0)
    return PrototypeSet(table, tuple(pool), tuple(class_names))


def training_features(train: Sequence[NormalizedSequence], pool: Sequence[FeatureId]) -> np.ndarray:
    """Stack pool features of equal-length training sequences into ``(n, P, T, 2)``."""
    lengths = {s.num_frames for s in train}
    if len(lengths) > 1:
        raise SchemaError(f"training sequences have mixed frame counts {sorted(lengths)}")
    return np.stack([feature_matrix(s.frames, pool) for s in train])


def build_prototypes(train: Sequence[NormalizedSequence], pool: Sequence[FeatureId],
                     class_names: Sequence[str]) -> PrototypeSet:
    """Elementwise median feature vectors for every (class, feature) pair.

    ``train`` must be labeled and resampled to a common frame count.
    """
    if not train:
        raise PreconditionError("no training sequences")
    if any(s.label is None for s in train):
        raise PreconditionError("training sequences must be labeled")
    labels = np.array([s.label for s in train])
    return prototypes_from_features(training_features(train, pool), labels, pool, class_names)
