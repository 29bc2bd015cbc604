"""Stratified cross-validation, confusion matrices and facial-region analysis."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .boosting import row_percentages, weak_vote_counts
from .data import Dataset, DomainError, FeatureId, ParseError, PreconditionError, SchemaError
from .normalization import normalize_dataset
from .pipeline import Model, PipelineConfig, fit_pipeline


def stratified_kfold(ds: Dataset, k: int, seed: int = 0) -> list[np.ndarray]:
    """Split ``ds`` into ``k`` disjoint test folds with balanced class counts.

    Each class is shuffled and dealt round-robin; the starting fold carries
    over between classes so fold sizes stay balanced overall.
    """
    if k < 2:
        raise DomainError("need at least two folds")
    y = ds.labels
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    folds = [[] for _ in range(k)]
    start = 0
    for c in range(ds.num_classes):
        members = np.flatnonzero(y == c)
        if len(members) < k:
            raise PreconditionError(
                f"class {ds.class_names[c]!r} has {len(members)} sequences, fewer than {k} folds"
            )
        for r, idx in enumerate(rng.permutation(members)):
            folds[(start + r) % k].append(int(idx))
        start = (start + len(members)) % k
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


@dataclass
class ConfusionMatrix:
    """Rows are actual classes, columns predicted classes."""

    counts: np.ndarray
    class_names: tuple[str, ...]

    @classmethod
    def from_predictions(cls, y_true, y_pred, class_names) -> "ConfusionMatrix":
        K = len(class_names)
        counts = np.zeros((K, K), dtype=np.int64)
        np.add.at(counts, (np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)), 1)
        return cls(counts, tuple(class_names))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else float("nan")

    @property
    def percentages(self) -> np.ndarray:
        return row_percentages(self.counts)

    def __add__(self, other):
        return ConfusionMatrix(self.counts + other.counts, self.class_names)

    def counts_csv(self) -> str:
        return _matrix_csv(self.counts.tolist(), self.class_names)

    def percent_csv(self) -> str:
        # full precision so that rows sum to 100
        return _matrix_csv([[repr(float(v)) for v in row] for row in self.percentages], self.class_names)

    def text_table(self, title: str = "") -> str:
        return format_table(self.percentages, self.class_names, title)


def _matrix_csv(rows, names) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["actual"] + list(names))
    for name, row in zip(names, rows):
        w.writerow([name] + list(row))
    return buf.getvalue()


def format_table(pct: np.ndarray, names: Sequence[str], title: str = "") -> str:
    width = max(9, max(len(n) for n in names) + 1)
    lines = [title] if title else []
    lines.append(" " * width + "".join(f"{n:>{width}}" for n in names))
    for name, row in zip(names, pct):
        lines.append(f"{name:<{width}}" + "".join(f"{v:>{width}.2f}" for v in row))
    return "\n".join(lines) + "\n"


@dataclass
class FoldResult:
    test_indices: np.ndarray
    model: Model
    predictions: np.ndarray
    confusion: ConfusionMatrix
    weak_counts: np.ndarray | None = None

    @property
    def accuracy(self) -> float:
        return self.confusion.accuracy


@dataclass
class CVResult:
    folds: list[FoldResult]
    pooled: ConfusionMatrix
    mean_accuracy: float
    weak_counts: np.ndarray | None = None

    @property
    def fold_accuracies(self) -> list[float]:
        return [f.accuracy for f in self.folds]


def run_cv(ds: Dataset, k: int = 5, config: PipelineConfig = PipelineConfig(), seed: int = 0,
           confusion_scores: bool = False) -> CVResult:
    """Stratified k-fold evaluation; every fitted artifact sees training folds only."""
    ds.require_trainable()
    folds = stratified_kfold(ds, k, seed)
    y = ds.labels
    results = []
    for test_idx in folds:
        train_idx = np.setdiff1d(np.arange(len(ds)), test_idx)
        model = fit_pipeline(ds.subset(train_idx), config)
        test = ds.subset(test_idx)
        preds = model.predict(test)
        weak = None
        if confusion_scores:
            weak = weak_vote_counts(model.strong, normalize_dataset(test, model.reference), model.dtw)
        results.append(FoldResult(
            test_idx, model, preds,
            ConfusionMatrix.from_predictions(y[test_idx], preds, ds.class_names), weak,
        ))
    pooled = ConfusionMatrix(sum(r.confusion.counts for r in results), ds.class_names)
    weak_total = sum(r.weak_counts for r in results) if confusion_scores else None
    return CVResult(results, pooled, float(np.mean([r.accuracy for r in results])), weak_total)


@dataclass(frozen=True)
class RegionMap:
    """Region label of every landmark, indexed by landmark."""

    labels: tuple[str, ...]

    def __getitem__(self, i: int) -> str:
        if not 0 <= i < len(self.labels):
            raise SchemaError(f"landmark {i} has no region")
        return self.labels[i]

    def __len__(self):
        return len(self.labels)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["landmark", "region"])
        for i, r in enumerate(self.labels):
            w.writerow([i, r])
        return buf.getvalue()

    @classmethod
    def load(cls, path) -> "RegionMap":
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["landmark", "region"]:
                raise ParseError(f"{path}:1: expected header landmark,region")
            mapping = {}
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    mapping[int(row[0])] = row[1].strip()
                except (ValueError, IndexError):
                    raise ParseError(f"{path}:{line_no}: malformed row") from None
        if sorted(mapping) != list(range(len(mapping))):
            raise SchemaError(f"{path}: landmark indices must be 0..{len(mapping) - 1} without gaps")
        return cls(tuple(mapping[i] for i in range(len(mapping))))


def default_region_map(L: int, regions: int = 7) -> RegionMap:
    """Contiguous blocks of landmark indices labeled R1..R<regions>."""
    labels = []
    for r, block in enumerate(np.array_split(np.arange(L), regions), start=1):
        labels.extend([f"R{r}"] * len(block))
    return RegionMap(tuple(labels))


def region_key(fid: FeatureId, regions: RegionMap) -> str:
    names = sorted({regions[i] for i in fid.landmarks}, key=_region_order)
    return "-".join(names)


def _region_order(name: str):
    digits = name.lstrip("R")
    return (0, int(digits), name) if digits.isdigit() else (1, 0, name)


def region_analysis(selected: Sequence[FeatureId], regions: RegionMap) -> dict[str, int]:
    """Count selected features per region (type one, within-region pairs) or region pair."""
    counts = Counter(region_key(f, regions) for f in selected)
    return dict(sorted(counts.items(), key=lambda kv: (kv[0].count("-"), [_region_order(p) for p in kv[0].split("-")])))


def region_csv(counts: dict[str, int], label: str | None = None) -> str:
    total = sum(counts.values())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((["class"] if label is not None else []) + ["region", "count", "share"])
    for key, n in counts.items():
        w.writerow(([label] if label is not None else []) + [key, n, repr(n / total if total else 0.0)])
    return buf.getvalue()


def write_cv_report(result: CVResult, outdir, regions: RegionMap | None = None) -> None:
    """Write per-fold and pooled matrices, accuracies and optional extras to ``outdir``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    names = result.pooled.class_names
    text = []
    for n, fold in enumerate(result.folds, start=1):
        (out / f"fold{n}_counts.csv").write_text(fold.confusion.counts_csv(), encoding="utf-8")
        (out / f"fold{n}_percent.csv").write_text(fold.confusion.percent_csv(), encoding="utf-8")
        text.append(fold.confusion.text_table(f"fold {n}: accuracy {100 * fold.accuracy:.2f}%"))
    (out / "pooled_counts.csv").write_text(result.pooled.counts_csv(), encoding="utf-8")
    (out / "pooled_percent.csv").write_text(result.pooled.percent_csv(), encoding="utf-8")
    text.append(result.pooled.text_table(
        f"pooled: accuracy {100 * result.pooled.accuracy:.2f}%, "
        f"mean of folds {100 * result.mean_accuracy:.2f}%"
    ))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fold", "accuracy", "rounds"])
    for n, fold in enumerate(result.folds, start=1):
        w.writerow([n, repr(fold.accuracy), len(fold.model.strong.rounds)])
    w.writerow(["mean", repr(result.mean_accuracy), ""])
    (out / "accuracy.csv").write_text(buf.getvalue(), encoding="utf-8")
    if result.weak_counts is not None:
        pct = row_percentages(result.weak_counts)
        (out / "confusion_scores.csv").write_text(
            _matrix_csv([[repr(float(v)) for v in row] for row in pct], names), encoding="utf-8"
        )
        text.append(format_table(pct, names, "weak-classifier confusion scores (%)"))
    if regions is not None:
        selected = [f for fold in result.folds for f in fold.model.features]
        (out / "regions.csv").write_text(region_csv(region_analysis(selected, regions)), encoding="utf-8")
        (out / "region_map.csv").write_text(regions.to_csv(), encoding="utf-8")
    (out / "report.txt").write_text("\n".join(text), encoding="utf-8")
