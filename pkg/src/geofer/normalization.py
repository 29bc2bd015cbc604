"""Neutral-frame alignment and fixed-length resampling of landmark sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, DomainError, LandmarkSequence, PreconditionError, SchemaError, _frozen

#: frame 0 plus N = 15 evolution frames
DEFAULT_TRAIN_FRAMES = 16


@dataclass(frozen=True, eq=False)
class NeutralReference:
    """Mean neutral-frame position of every landmark, shape ``(L, 2)``."""

    mean_points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.mean_points)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise SchemaError(f"mean_points must have shape (L, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise SchemaError("non-finite neutral reference")
        object.__setattr__(self, "mean_points", pts)

    def __len__(self):
        return self.mean_points.shape[0]

    def to_json(self):
        return self.mean_points.tolist()

    @classmethod
    def from_json(cls, obj):
        return cls(np.array(obj, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class NormalizedSequence:
    """A sequence translated so that frame 0 sits on the neutral reference.

    ``offsets`` holds the per-landmark translation that was applied.
    """

    frames: np.ndarray
    offsets: np.ndarray
    label: int | None = None
    subject_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "frames", _frozen(self.frames))
        object.__setattr__(self, "offsets", _frozen(self.offsets))

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_landmarks(self) -> int:
        return self.frames.shape[1]


def compute_neutral_reference(train: Dataset) -> NeutralReference:
    if len(train) == 0:
        raise PreconditionError("cannot compute a neutral reference from an empty dataset")
    neutral = np.stack([s.frames[0] for s in train])
    return NeutralReference(neutral.mean(axis=0))


def normalize_sequence(seq: LandmarkSequence, ref: NeutralReference) -> NormalizedSequence:
    if seq.num_landmarks != len(ref):
        raise SchemaError(
            f"sequence has {seq.num_landmarks} landmarks, reference has {len(ref)}"
        )
    offsets = ref.mean_points - seq.frames[0]
    return NormalizedSequence(seq.frames + offsets, offsets, seq.label, seq.subject_id)


def normalize_dataset(ds: Dataset, ref: NeutralReference) -> list[NormalizedSequence]:
    return [normalize_sequence(s, ref) for s in ds]


def resample_sequence(seq: NormalizedSequence, target_frames: int) -> NormalizedSequence:
    """Linearly interpolate ``seq`` onto ``target_frames`` uniformly spaced frame positions.

    Endpoints are copied, not interpolated, so they are preserved bit for bit.
    """
    if target_frames < 2:
        raise DomainError(f"target_frames must be >= 2, got {target_frames}")
    F = seq.num_frames
    if target_frames == F:
        return seq
    t = np.arange(target_frames) * (F - 1) / (target_frames - 1)
    lo = np.minimum(np.floor(t).astype(np.int64), F - 2)
    frac = (t - lo)[:, None, None]
    out = seq.frames[lo] * (1.0 - frac) + seq.frames[lo + 1] * frac
    out[0] = seq.frames[0]
    out[-1] = seq.frames[-1]
    return NormalizedSequence(out, seq.offsets, seq.label, seq.subject_id)
