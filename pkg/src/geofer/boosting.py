"""Feature-selective multi-class AdaBoost (SAMME) over DTW nearest-prototype weak classifiers.

Weak classifiers have no trainable parameters: each pool feature votes for
the class whose prototype is DTW-nearest. The vote of every feature on every
training sample is therefore computed once (a ``(P, n)`` prediction matrix)
and boosting rounds only re-weight that fixed matrix.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import DomainError, FeatureId, PreconditionError
from .dtw import DtwConfig, nearest_per_feature, nearest_prototype
from .features import extract_feature, feature_matrix
from .normalization import NormalizedSequence
from .prototypes import PrototypeSet

EPS = 1e-10


def samme_alpha(err: float, K: int) -> float:
    return math.log((1.0 - err) / err) + math.log(K - 1)


def weak_prediction_matrix(samples: Sequence[np.ndarray], protos: np.ndarray, cfg: DtwConfig,
                           threads: int = 1) -> np.ndarray:
    """Votes of every feature on every sample.

    ``samples`` holds one ``(P, T_s, 2)`` feature array per sample (lengths may
    differ) and ``protos`` is the matching ``(K, P, T, 2)`` prototype table.
    Returns an int array of shape ``(P, n)``.
    """
    P = protos.shape[1]
    out = np.empty((P, len(samples)), dtype=np.int64)

    def run(s):
        out[:, s] = nearest_per_feature(samples[s], protos, cfg)

    if threads > 1 and len(samples) > 1:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(run, range(len(samples))))
    else:
        for s in range(len(samples)):
            run(s)
    return out


@dataclass
class SammeResult:
    selected: list[int] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    weights: list[np.ndarray] = field(default_factory=list)
    stop_reason: str = "completed"


def samme(preds: np.ndarray, y: np.ndarray, K: int, rounds: int, eps: float = EPS) -> SammeResult:
    """Run the boosting loop on a fixed ``(P, n)`` weak-prediction matrix.

    Features are never selected twice. ``weights`` records the normalized
    distribution used in each accepted round.
    """
    preds = np.asarray(preds)
    y = np.asarray(y)
    P, n = preds.shape
    if rounds < 1:
        raise PreconditionError("need at least one boosting round")
    if P == 0 or n == 0:
        raise PreconditionError("empty pool or training set")
    if K < 2:
        raise DomainError("need at least two classes")
    miss = (preds != y[None, :]).astype(np.float64)
    chance = 1.0 - 1.0 / K
    w = np.full(n, 1.0 / n)
    available = np.ones(P, dtype=bool)
    votes = np.zeros((n, K))
    res = SammeResult()
    for m in range(rounds):
        w = w / w.sum()
        if not available.any():
            res.stop_reason = f"pool exhausted after {m} rounds"
            break
        err_all = (miss * w).sum(axis=1)
        err_all[~available] = np.inf
        f = int(np.argmin(err_all))
        raw = float(err_all[f])
        if raw >= chance - eps:
            res.stop_reason = (
                f"round {m + 1}: best weighted error {raw:.6g} is not better than chance"
            )
            break
        err = min(max(raw, eps), chance - eps)
        alpha = samme_alpha(err, K)
        available[f] = False
        votes[np.arange(n), preds[f]] += alpha
        res.selected.append(f)
        res.errors.append(err)
        res.alphas.append(alpha)
        res.train_accuracy.append(float(np.mean(votes.argmax(axis=1) == y)))
        res.weights.append(w)
        w = w * np.exp(alpha * miss[f])
        if raw <= eps:
            res.stop_reason = f"round {m + 1}: weak classifier is perfect on the training set"
            break
    return res


@dataclass(frozen=True)
class TraceRound:
    feature_id: FeatureId
    err: float
    alpha: float
    train_acc: float


@dataclass
class BoostTrace:
    rounds: list[TraceRound]
    stop_reason: str

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "feature_id", "err", "alpha", "train_acc"])
        for m, r in enumerate(self.rounds, start=1):
            w.writerow([m, str(r.feature_id), repr(r.err), repr(r.alpha), repr(r.train_acc)])
        w.writerow(["#", "stop", self.stop_reason, "", ""])
        return buf.getvalue()


class StrongClassifier:
    """Alpha-weighted vote of weak classifiers, one per selected feature."""

    def __init__(self, rounds: Sequence[tuple[FeatureId, float]], prototypes: PrototypeSet):
        rounds = tuple((f, float(a)) for f, a in rounds)
        fids = [f for f, _ in rounds]
        if len(set(fids)) != len(fids):
            raise DomainError("selected features must be distinct")
        if any(a <= 0 for _, a in rounds):
            raise DomainError("every alpha must be positive")
        self.rounds = rounds
        self.prototypes = prototypes.restrict(fids)
        self.num_classes = prototypes.num_classes

    @property
    def features(self) -> list[FeatureId]:
        return [f for f, _ in self.rounds]

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for _, a in self.rounds])

    def weak_votes(self, x: NormalizedSequence, cfg: DtwConfig = DtwConfig()) -> np.ndarray:
        """Class voted by each round's weak classifier for ``x``."""
        feats = feature_matrix(x.frames, self.features)
        return nearest_per_feature(feats, self.prototypes.table, cfg)

    def to_json(self) -> dict:
        return {
            "rounds": [{"feature": str(f), "alpha": a} for f, a in self.rounds],
            "prototypes": self.prototypes.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StrongClassifier":
        protos = PrototypeSet.from_json(obj["prototypes"])
        return cls([(FeatureId.parse(r["feature"]), r["alpha"]) for r in obj["rounds"]], protos)


def vote_winner(votes: np.ndarray, alphas: np.ndarray, K: int) -> int:
    tally = np.zeros(K)
    np.add.at(tally, votes, alphas)
    return int(np.argmax(tally))


def weak_classify(x: NormalizedSequence, fid: FeatureId, protos: PrototypeSet,
                  cfg: DtwConfig = DtwConfig()) -> int:
    return nearest_prototype(extract_feature(x, fid), protos.vectors(fid), cfg)


def strong_classify(x: NormalizedSequence, sc: StrongClassifier, cfg: DtwConfig = DtwConfig()) -> int:
    return vote_winner(sc.weak_votes(x, cfg), sc.alphas, sc.num_classes)


def _pool_predictions(train, pool, protos, cfg, threads, features=None):
    idx = [protos.feature_index(f) for f in pool]
    table = protos.table[:, idx]
    if features is None:
        features = [feature_matrix(s.frames, pool) for s in train]
    return weak_prediction_matrix(features, table, cfg, threads)


def _labels(train) -> np.ndarray:
    if any(s.label is None for s in train):
        raise PreconditionError("training sequences must be labeled")
    return np.array([s.label for s in train], dtype=np.int64)


def _trace(res: SammeResult, pool) -> BoostTrace:
    return BoostTrace(
        [TraceRound(pool[f], e, a, acc)
         for f, e, a, acc in zip(res.selected, res.errors, res.alphas, res.train_accuracy)],
        res.stop_reason,
    )


def train_samme(train: Sequence[NormalizedSequence], pool: Sequence[FeatureId], protos: PrototypeSet,
                rounds: int, cfg: DtwConfig = DtwConfig(), threads: int = 1,
                predictions: np.ndarray | None = None) -> tuple[StrongClassifier, BoostTrace]:
    """Select ``rounds`` distinct features by SAMME boosting.

    ``predictions`` may supply a precomputed ``(len(pool), n)`` vote matrix.
    """
    if not train or not pool:
        raise PreconditionError("empty pool or training set")
    y = _labels(train)
    if predictions is None:
        predictions = _pool_predictions(train, pool, protos, cfg, threads)
    res = samme(predictions, y, protos.num_classes, rounds)
    sc = StrongClassifier([(pool[f], a) for f, a in zip(res.selected, res.alphas)], protos)
    return sc, _trace(res, pool)


def select_binary_features(train: Sequence[NormalizedSequence], pool: Sequence[FeatureId],
                           protos: PrototypeSet, positive: int, rounds: int,
                           cfg: DtwConfig = DtwConfig(), threads: int = 1,
                           predictions: np.ndarray | None = None) -> tuple[list[tuple[FeatureId, float]], BoostTrace]:
    """One-vs-all feature selection for class ``positive``.

    A weak classifier votes positive iff the positive class wins the full
    K-way nearest-prototype contest, so the K-class vote matrix is reused.
    """
    y = _labels(train)
    if not np.any(y == positive):
        raise PreconditionError(f"positive class {protos.class_names[positive]!r} has no sequences")
    if predictions is None:
        predictions = _pool_predictions(train, pool, protos, cfg, threads)
    res = samme((predictions != positive).astype(np.int64), (y != positive).astype(np.int64), 2, rounds)
    trace = _trace(res, pool)
    return [(r.feature_id, r.alpha) for r in trace.rounds], trace


def weak_vote_counts(sc: StrongClassifier, samples: Sequence[NormalizedSequence],
                     cfg: DtwConfig = DtwConfig()) -> np.ndarray:
    """``(K, K)`` counts of weak votes, rows = true class, columns = voted class."""
    K = sc.num_classes
    counts = np.zeros((K, K), dtype=np.int64)
    for x in samples:
        if x.label is None:
            raise PreconditionError("evaluation sequences must be labeled")
        counts[x.label] += np.bincount(sc.weak_votes(x, cfg), minlength=K)
    return counts


def row_percentages(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        pct = np.where(totals > 0, 100.0 * counts / totals, 0.0)
    return pct


def weak_confusion_scores(sc: StrongClassifier, samples: Sequence[NormalizedSequence],
                          cfg: DtwConfig = DtwConfig()) -> np.ndarray:
    """Percentage of weak votes cast for each class, per true class."""
    if not sc.rounds or not samples:
        raise PreconditionError("need a non-empty ensemble and evaluation set")
    return row_percentages(weak_vote_counts(sc, samples, cfg))
