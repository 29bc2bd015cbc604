"""Dynamic time warping between 2-D feature vectors.

The local cost between elements ``u`` and ``v`` is the scaled Euclidean
distance ``sqrt((s_a*(u_a - v_a))**2 + (s_b*(u_b - v_b))**2)``. Paths are
boundary aligned with steps (1, 0), (0, 1) and (1, 1), without step weights
or length normalization. An optional Sakoe-Chiba band ``|i - j| <= window``
restricts the admissible cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .data import DomainError
from .features import FeatureVector

#: above this length the cost matrix is not kept, only two rolling rows
FULL_MATRIX_MAX = 512


@dataclass(frozen=True)
class DtwConfig:
    window: int | None = None
    component_scale: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.window is not None and self.window < 0:
            raise DomainError(f"window must be >= 0, got {self.window}")
        sa, sb = self.component_scale
        if not (np.isfinite(sa) and np.isfinite(sb) and sa > 0 and sb > 0):
            raise DomainError(f"component scales must be finite and positive, got {self.component_scale}")
        object.__setattr__(self, "component_scale", (float(sa), float(sb)))

    @property
    def _band(self) -> int:
        return -1 if self.window is None else int(self.window)

    def to_json(self):
        return {"window": self.window, "component_scale": list(self.component_scale)}

    @classmethod
    def from_json(cls, obj):
        return cls(obj.get("window"), tuple(obj.get("component_scale", (1.0, 1.0))))


@njit(cache=True, nogil=True)
def _local(a, b, i, j, sa, sb):
    da = sa * (a[i, 0] - b[j, 0])
    db = sb * (a[i, 1] - b[j, 1])
    return np.sqrt(da * da + db * db)


@njit(cache=True, nogil=True)
def _cost_matrix(a, b, sa, sb, window):
    n, m = a.shape[0], b.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(n):
        j0, j1 = 0, m
        if window >= 0:
            j0 = max(0, i - window)
            j1 = min(m, i + window + 1)
        for j in range(j0, j1):
            best = min(acc[i, j], acc[i, j + 1], acc[i + 1, j])
            acc[i + 1, j + 1] = _local(a, b, i, j, sa, sb) + best
    return acc


@njit(cache=True, nogil=True)
def _dtw_rolling(a, b, sa, sb, window):
    n, m = a.shape[0], b.shape[0]
    prev = np.full(m + 1, np.inf)
    cur = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(n):
        cur[:] = np.inf
        j0, j1 = 0, m
        if window >= 0:
            j0 = max(0, i - window)
            j1 = min(m, i + window + 1)
        for j in range(j0, j1):
            best = min(prev[j], prev[j + 1], cur[j])
            cur[j + 1] = _local(a, b, i, j, sa, sb) + best
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True, nogil=True)
def _dtw(a, b, sa, sb, window):
    if a.shape[0] <= FULL_MATRIX_MAX and b.shape[0] <= FULL_MATRIX_MAX:
        return _cost_matrix(a, b, sa, sb, window)[a.shape[0], b.shape[0]]
    return _dtw_rolling(a, b, sa, sb, window)


@njit(cache=True, nogil=True)
def _envelope_bound(a, b, sa, sb, window):
    # every path visits each row of `a` at least once, inside the band
    n, m = a.shape[0], b.shape[0]
    total = 0.0
    for i in range(n):
        j0 = max(0, i - window)
        j1 = min(m, i + window + 1)
        lo0 = hi0 = b[j0, 0]
        lo1 = hi1 = b[j0, 1]
        for j in range(j0 + 1, j1):
            lo0 = min(lo0, b[j, 0])
            hi0 = max(hi0, b[j, 0])
            lo1 = min(lo1, b[j, 1])
            hi1 = max(hi1, b[j, 1])
        e0 = 0.0
        if a[i, 0] > hi0:
            e0 = a[i, 0] - hi0
        elif a[i, 0] < lo0:
            e0 = lo0 - a[i, 0]
        e1 = 0.0
        if a[i, 1] > hi1:
            e1 = a[i, 1] - hi1
        elif a[i, 1] < lo1:
            e1 = lo1 - a[i, 1]
        e0 *= sa
        e1 *= sb
        total += np.sqrt(e0 * e0 + e1 * e1)
    return total


@njit(cache=True, nogil=True)
def _lower_bound(a, b, sa, sb, window):
    return max(_envelope_bound(a, b, sa, sb, window), _envelope_bound(b, a, sa, sb, window))


@njit(cache=True, nogil=True)
def _nearest(x, protos, sa, sb, window, prune):
    """Index of the DTW-nearest row of ``protos`` (K, T, 2); ties go to the lowest index."""
    best = np.inf
    best_k = 0
    for k in range(protos.shape[0]):
        p = protos[k]
        if prune and best < np.inf and _lower_bound(x, p, sa, sb, window) >= best:
            continue
        d = _dtw(x, p, sa, sb, window)
        if d < best:
            best = d
            best_k = k
    return best_k


@njit(cache=True, nogil=True)
def _nearest_per_feature(x, protos, sa, sb, window, prune):
    """Weak votes for one sample: ``x`` (P, T, 2) against ``protos`` (K, P, Tp, 2)."""
    P = x.shape[0]
    out = np.empty(P, dtype=np.int64)
    for f in range(P):
        out[f] = _nearest(x[f], protos[:, f], sa, sb, window, prune)
    return out


def _as_elements(v) -> np.ndarray:
    arr = v.elements if isinstance(v, FeatureVector) else v
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError(f"feature elements must have shape (T, 2), got {arr.shape}")
    if arr.shape[0] == 0:
        raise DomainError("empty feature vector")
    return arr


def _check_pair(a, b, cfg: DtwConfig):
    if isinstance(a, FeatureVector) and isinstance(b, FeatureVector):
        if a.feature_id.is_pair != b.feature_id.is_pair:
            raise DomainError("cannot compare a type-one with a type-two feature vector")
    ea, eb = _as_elements(a), _as_elements(b)
    if cfg.window is not None:
        need = abs(ea.shape[0] - eb.shape[0])
        if cfg.window < need:
            raise DomainError(f"band too narrow: window must be at least {need}")
    return ea, eb


def dtw_distance(a, b, cfg: DtwConfig = DtwConfig()) -> float:
    """Exact DTW distance between two feature vectors (or ``(T, 2)`` arrays)."""
    ea, eb = _check_pair(a, b, cfg)
    sa, sb = cfg.component_scale
    return float(_dtw(ea, eb, sa, sb, cfg._band))


def accumulated_cost(a, b, cfg: DtwConfig = DtwConfig()) -> np.ndarray:
    """Accumulated cost matrix of shape ``(len(a), len(b))``; ``inf`` outside the band."""
    ea, eb = _check_pair(a, b, cfg)
    sa, sb = cfg.component_scale
    return _cost_matrix(ea, eb, sa, sb, cfg._band)[1:, 1:]


def lower_bound(a, b, cfg: DtwConfig) -> float:
    """Envelope lower bound on ``dtw_distance(a, b, cfg)``, for pruning only."""
    if cfg.window is None:
        raise DomainError("lower_bound requires a band window")
    ea, eb = _check_pair(a, b, cfg)
    sa, sb = cfg.component_scale
    return float(_lower_bound(ea, eb, sa, sb, cfg.window))


def nearest_prototype(x, protos: Sequence, cfg: DtwConfig = DtwConfig(), prune: bool = True) -> int:
    """Class index whose prototype is DTW-nearest to ``x``.

    Pruning uses ``lower_bound`` and is only active when ``cfg`` has a window;
    it never changes the answer.
    """
    if len(protos) == 0:
        raise DomainError("empty prototype set")
    ex = _as_elements(x)
    for p in protos:
        _check_pair(x, p, cfg)
    stack = np.stack([_as_elements(p) for p in protos]) if _same_length(protos) else None
    sa, sb = cfg.component_scale
    use_prune = prune and cfg.window is not None
    if stack is not None:
        return int(_nearest(ex, stack, sa, sb, cfg._band, use_prune))
    dists = [dtw_distance(ex, _as_elements(p), cfg) for p in protos]
    return int(np.argmin(dists))


def _same_length(protos) -> bool:
    return len({_as_elements(p).shape[0] for p in protos}) == 1


def nearest_per_feature(x: np.ndarray, protos: np.ndarray, cfg: DtwConfig, prune: bool = True) -> np.ndarray:
    """Vectorized weak votes for one sample over many features.

    ``x`` is ``(P, T, 2)`` and ``protos`` is ``(K, P, Tp, 2)``; returns ``(P,)`` class indices.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    protos = np.ascontiguousarray(protos, dtype=np.float64)
    if cfg.window is not None and cfg.window < abs(x.shape[1] - protos.shape[2]):
        raise DomainError(
            f"band too narrow: window must be at least {abs(x.shape[1] - protos.shape[2])}"
        )
    sa, sb = cfg.component_scale
    return _nearest_per_feature(x, protos, sa, sb, cfg._band, prune and cfg.window is not None)
