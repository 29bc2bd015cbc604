"""Core domain types, feature-pool enumeration and trajectory-file ingestion.

A trajectory file is a UTF-8 CSV with header ``frame,landmark,x,y`` and one
row per (frame, landmark), sorted by frame then landmark. A manifest is a
JSON array of ``{"path", "label", "subject_id"}`` records; relative paths are
resolved against the manifest's directory and ``label`` is either a class
name or an integer index (or ``null`` for unlabeled sequences).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import total_ordering
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_CLASS_NAMES = ("anger", "disgust", "fear", "happiness", "sadness", "surprise")
DEFAULT_NUM_LANDMARKS = 52

CSV_HEADER = ["frame", "landmark", "x", "y"]


class GeoferError(Exception):
    """Base class for errors raised by this package."""


class ParseError(GeoferError):
    pass


class SchemaError(GeoferError):
    pass


class DataError(GeoferError):
    pass


class PreconditionError(GeoferError):
    pass


class DomainError(GeoferError, ValueError):
    pass


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LandmarkSequence:
    """A tracked trajectory of ``L`` 2-D landmarks over ``F`` frames.

    ``frames`` has shape ``(F, L, 2)`` holding pixel ``(x, y)``; frame 0 is
    the neutral face.
    """

    frames: np.ndarray
    label: int | None = None
    subject_id: str | None = None

    def __post_init__(self):
        frames = _frozen(self.frames)
        if frames.ndim != 3 or frames.shape[2] != 2:
            raise SchemaError(f"frames must have shape (F, L, 2), got {frames.shape}")
        if frames.shape[0] < 2:
            raise SchemaError(f"a sequence needs at least 2 frames, got {frames.shape[0]}")
        if frames.shape[1] < 2:
            raise SchemaError(f"a sequence needs at least 2 landmarks, got {frames.shape[1]}")
        if not np.all(np.isfinite(frames)):
            raise DataError("non-finite landmark coordinate")
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_landmarks(self) -> int:
        return self.frames.shape[1]

    def __eq__(self, other):
        if not isinstance(other, LandmarkSequence):
            return NotImplemented
        return (
            self.label == other.label
            and self.subject_id == other.subject_id
            and np.array_equal(self.frames, other.frames)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered collection of sequences sharing one landmark count."""

    sequences: tuple[LandmarkSequence, ...] = ()
    class_names: tuple[str, ...] = DEFAULT_CLASS_NAMES
    num_landmarks: int | None = None

    def __post_init__(self):
        seqs = tuple(self.sequences)
        names = tuple(self.class_names)
        if len(names) < 2:
            raise DomainError("at least two classes are required")
        L = self.num_landmarks
        for k, s in enumerate(seqs):
            if L is None:
                L = s.num_landmarks
            elif s.num_landmarks != L:
                raise SchemaError(
                    f"sequence {k} has {s.num_landmarks} landmarks, dataset has {L}"
                )
            if s.label is not None and not 0 <= s.label < len(names):
                raise SchemaError(f"sequence {k} has invalid label {s.label}")
        object.__setattr__(self, "sequences", seqs)
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "num_landmarks", L)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def labels(self) -> np.ndarray:
        if any(s.label is None for s in self.sequences):
            raise PreconditionError("dataset contains unlabeled sequences")
        return np.array([s.label for s in self.sequences], dtype=np.int64)

    def __len__(self):
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, k):
        return self.sequences[k]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and self.num_landmarks == other.num_landmarks
            and self.sequences == other.sequences
        )

    __hash__ = None

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(
            tuple(self.sequences[int(k)] for k in indices),
            self.class_names,
            self.num_landmarks,
        )

    def require_trainable(self):
        """Raise unless every sequence is labeled and every class is populated."""
        if not self.sequences:
            raise PreconditionError("cannot train on an empty dataset")
        counts = np.bincount(self.labels, minlength=self.num_classes)
        for c, n in enumerate(counts):
            if n == 0:
                raise PreconditionError(f"class {self.class_names[c]!r} has no sequences")


@total_ordering
@dataclass(frozen=True)
class FeatureId:
    """A pool member: ``FeatureId(i)`` is type one, ``FeatureId(i, j)`` type two."""

    i: int
    j: int | None = None

    def __post_init__(self):
        if self.i < 0:
            raise DomainError(f"negative landmark index {self.i}")
        if self.j is not None and not self.i < self.j:
            raise DomainError(f"type-two feature needs i < j, got ({self.i}, {self.j})")

    @property
    def is_pair(self) -> bool:
        return self.j is not None

    @property
    def landmarks(self) -> tuple[int, ...]:
        return (self.i,) if self.j is None else (self.i, self.j)

    def __str__(self):
        return f"t1:{self.i}" if self.j is None else f"t2:{self.i}-{self.j}"

    def __lt__(self, other):
        # canonical pool order: every type-one id precedes every type-two id
        return self._key() < other._key()

    def _key(self):
        return (self.j is not None, self.i, -1 if self.j is None else self.j)

    @classmethod
    def parse(cls, text: str) -> "FeatureId":
        kind, _, rest = text.strip().partition(":")
        try:
            if kind == "t1":
                return cls(int(rest))
            if kind == "t2":
                i, j = rest.split("-")
                return cls(int(i), int(j))
        except ValueError:
            pass
        raise ParseError(f"cannot parse feature id {text!r}")

    def index(self, L: int) -> int:
        """Position of this id in ``enumerate_pool(L)``."""
        if max(self.landmarks) >= L:
            raise DomainError(f"{self} is out of range for {L} landmarks")
        if self.j is None:
            return self.i
        i, j = self.i, self.j
        return L + i * (2 * L - i - 1) // 2 + (j - i - 1)


def pool_size(L: int) -> int:
    return L + L * (L - 1) // 2


def enumerate_pool(L: int) -> list[FeatureId]:
    """All type-one ids (ascending) followed by all type-two ids in (i, j) order."""
    if L < 2:
        raise DomainError(f"need at least 2 landmarks, got {L}")
    pool = [FeatureId(i) for i in range(L)]
    pool.extend(FeatureId(i, j) for i in range(L) for j in range(i + 1, L))
    return pool


def resolve_label(label, class_names: Sequence[str]) -> int | None:
    if label is None:
        return None
    if isinstance(label, bool):
        raise SchemaError(f"invalid label {label!r}")
    if isinstance(label, int):
        if not 0 <= label < len(class_names):
            raise SchemaError(f"label index {label} out of range")
        return label
    if isinstance(label, str):
        if label in class_names:
            return class_names.index(label)
        raise SchemaError(f"unknown class name {label!r}")
    raise SchemaError(f"invalid label {label!r}")


def read_trajectory(path, label=None, subject_id=None) -> LandmarkSequence:
    """Parse one trajectory CSV file."""
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(f"{path}:1: expected header {','.join(CSV_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"{path}:{line_no}: expected 4 fields, got {len(row)}")
            try:
                f, l, x, y = int(row[0]), int(row[1]), float(row[2]), float(row[3])
            except ValueError as exc:
                raise ParseError(f"{path}:{line_no}: {exc}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DataError(f"{path}:{line_no}: non-finite coordinate")
            rows.append((line_no, f, l, x, y))
    if not rows:
        raise ParseError(f"{path}: no data rows")

    frames: list[list[tuple[float, float]]] = []
    for line_no, f, l, x, y in rows:
        if f == len(frames):
            if frames and l != 0:
                raise ParseError(f"{path}:{line_no}: frame {f} must start at landmark 0")
            frames.append([])
        elif f != len(frames) - 1:
            raise ParseError(f"{path}:{line_no}: rows not sorted by frame (frame {f})")
        if l != len(frames[-1]):
            raise ParseError(f"{path}:{line_no}: rows not sorted by landmark (landmark {l})")
        frames[-1].append((x, y))

    L = len(frames[0])
    for f, pts in enumerate(frames):
        if len(pts) != L:
            raise SchemaError(f"{path}: frame {f} has {len(pts)} points, expected {L}")
    return LandmarkSequence(np.array(frames), label, subject_id)


def write_trajectory(path, seq: LandmarkSequence):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for f, pts in enumerate(seq.frames):
            for l, (x, y) in enumerate(pts):
                w.writerow([f, l, repr(float(x)), repr(float(y))])


def load_dataset(manifest_path, class_names: Sequence[str] = DEFAULT_CLASS_NAMES) -> Dataset:
    """Load every trajectory listed in a manifest, preserving manifest order."""
    manifest_path = Path(manifest_path)
    try:
        records = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{manifest_path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(records, list):
        raise ParseError(f"{manifest_path}: manifest must be a JSON array")
    names = tuple(class_names)
    seqs = []
    for k, rec in enumerate(records):
        if not isinstance(rec, dict) or "path" not in rec:
            raise ParseError(f"{manifest_path}: record {k} lacks a 'path'")
        label = resolve_label(rec.get("label"), names)
        p = Path(rec["path"])
        if not p.is_absolute():
            p = manifest_path.parent / p
        seq = read_trajectory(p, label, rec.get("subject_id"))
        if seqs and seq.num_landmarks != seqs[0].num_landmarks:
            raise SchemaError(
                f"{p}: {seq.num_landmarks} landmarks, earlier files have {seqs[0].num_landmarks}"
            )
        seqs.append(seq)
    return Dataset(tuple(seqs), names)


def save_dataset(ds: Dataset, directory, prefix: str = "seq") -> Path:
    """Write ``ds`` as trajectory CSVs plus ``manifest.json``; return the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(ds))))
    records = []
    for k, seq in enumerate(ds):
        name = f"{prefix}_{k:0{width}d}.csv"
        write_trajectory(directory / name, seq)
        records.append({
            "path": name,
            "label": None if seq.label is None else ds.class_names[seq.label],
            "subject_id": seq.subject_id,
        })
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps(records, indent=1) + "\n", encoding="utf-8")
    return manifest
