"""Compact boosted features and classify them with a grid-searched RBF SVM.

Training delegates to libsvm (through scikit-learn). The fitted model is
reduced to its support vectors, dual coefficients and intercepts, and
prediction evaluates the one-vs-one decision functions directly so a saved
model needs nothing but numpy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.model_selection import GridSearchCV, StratifiedKFold
from sklearn.svm import SVC

from .data import DomainError, FeatureId, ParseError, PreconditionError, SchemaError
from .features import feature_matrix
from .normalization import NormalizedSequence

FORMAT = "geofer.margin-model"
VERSION = 1

DEFAULT_GRID = {
    "C": [2.0 ** e for e in range(-5, 16, 2)],
    "gamma": [2.0 ** e for e in range(-15, 4, 2)],
}


def compact_features(x: NormalizedSequence, selected: Sequence[FeatureId], use_abs: bool = False) -> np.ndarray:
    """Per selected feature, the maximum of each component over all frames.

    With ``use_abs`` the maximum absolute value is taken instead, which keeps
    negative-going motion visible.
    """
    if len(selected) == 0:
        raise DomainError("no features selected")
    feats = feature_matrix(x.frames, selected)
    if use_abs:
        feats = np.abs(feats)
    return feats.max(axis=1).reshape(-1)


def standardize(X, mean, scale):
    return (np.asarray(X, dtype=np.float64) - mean) / scale


def unstandardize(Z, mean, scale):
    return np.asarray(Z, dtype=np.float64) * scale + mean


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True, eq=False)
class MarginModel:
    mean: np.ndarray
    scale: np.ndarray
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # (n_classes - 1, n_SV), libsvm one-vs-one layout
    intercept: np.ndarray  # one per class pair (0,1), (0,2), ..., (1,2), ...
    n_support: np.ndarray
    classes: np.ndarray
    C: float
    gamma: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def decision_pairs(self, Z: np.ndarray) -> np.ndarray:
        """One-vs-one decision values for standardized inputs, shape ``(n, n_pairs)``."""
        kern = rbf_kernel(Z, self.support_vectors, self.gamma)
        start = np.concatenate([[0], np.cumsum(self.n_support)])
        n_cls = len(self.classes)
        out = []
        p = 0
        for i in range(n_cls):
            for j in range(i + 1, n_cls):
                si = slice(start[i], start[i + 1])
                sj = slice(start[j], start[j + 1])
                dec = kern[:, si] @ self.dual_coef[j - 1, si] + kern[:, sj] @ self.dual_coef[i, sj]
                out.append(dec + self.intercept[p])
                p += 1
        return np.column_stack(out)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise SchemaError(f"expected {self.dim}-dimensional input, got {X.shape[1]}")
        dec = self.decision_pairs(standardize(X, self.mean, self.scale))
        n_cls = len(self.classes)
        votes = np.zeros((X.shape[0], n_cls), dtype=np.int64)
        p = 0
        for i in range(n_cls):
            for j in range(i + 1, n_cls):
                pos = dec[:, p] > 0
                votes[pos, i] += 1
                votes[~pos, j] += 1
                p += 1
        return self.classes[np.argmax(votes, axis=1)]

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "C": self.C,
            "gamma": self.gamma,
            "classes": self.classes.tolist(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "n_support": self.n_support.tolist(),
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "intercept": self.intercept.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MarginModel":
        if obj.get("format") != FORMAT or obj.get("version") != VERSION:
            raise ParseError(f"not a {FORMAT} v{VERSION} document")
        dim = len(obj["mean"])
        return cls(
            mean=np.array(obj["mean"], dtype=np.float64),
            scale=np.array(obj["scale"], dtype=np.float64),
            support_vectors=np.array(obj["support_vectors"], dtype=np.float64).reshape(-1, dim),
            dual_coef=np.array(obj["dual_coef"], dtype=np.float64).reshape(len(obj["classes"]) - 1, -1),
            intercept=np.array(obj["intercept"], dtype=np.float64),
            n_support=np.array(obj["n_support"], dtype=np.int64),
            classes=np.array(obj["classes"], dtype=np.int64),
            C=float(obj["C"]),
            gamma=float(obj["gamma"]),
        )


def _from_svc(svc: SVC, mean, scale) -> MarginModel:
    dual = np.array(svc.dual_coef_, dtype=np.float64)
    intercept = np.array(svc.intercept_, dtype=np.float64)
    if len(svc.classes_) == 2:
        # scikit-learn flips the sign of binary models relative to libsvm
        dual, intercept = -dual, -intercept
    return MarginModel(
        mean=mean,
        scale=scale,
        support_vectors=np.array(svc.support_vectors_, dtype=np.float64),
        dual_coef=dual,
        intercept=intercept,
        n_support=np.array(svc.n_support_, dtype=np.int64),
        classes=np.array(svc.classes_, dtype=np.int64),
        C=float(svc.C),
        gamma=float(svc.gamma),
    )


def train_margin_model(X, y, grid: dict | None = None, folds: int = 3, seed: int = 0,
                       threads: int = 1) -> MarginModel:
    """Grid-search (C, gamma) by stratified inner CV, then refit on all of ``X``.

    Inputs are standardized per dimension with statistics from ``X``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise PreconditionError("need at least two classes to train a margin model")
    grid = DEFAULT_GRID if grid is None else grid
    if not grid.get("C") or not grid.get("gamma"):
        raise PreconditionError("empty hyperparameter grid")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = standardize(X, mean, scale)
    if len(grid["C"]) == 1 and len(grid["gamma"]) == 1:
        svc = SVC(kernel="rbf", C=grid["C"][0], gamma=grid["gamma"][0]).fit(Z, y)
    else:
        search = GridSearchCV(
            SVC(kernel="rbf"),
            {"C": list(grid["C"]), "gamma": list(grid["gamma"])},
            cv=StratifiedKFold(folds, shuffle=True, random_state=seed),
            n_jobs=threads if threads > 1 else None,
        )
        search.fit(Z, y)
        svc = search.best_estimator_
    return _from_svc(svc, mean, scale)


def classify_margin(model: MarginModel, v) -> int:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise SchemaError("expected a single compact vector")
    return int(model.predict(v[None, :])[0])
