"""Type-one (landmark displacement) and type-two (pair distance/angle change) features.

Every feature vector has one 2-tuple per evolution frame: element ``l - 1``
describes frame ``l`` relative to the neutral frame 0. Type-one elements are
``(dx, dy)`` in pixels; type-two elements are ``(dd, dtheta)`` in pixels and
radians, with ``dtheta`` wrapped into ``(-pi, pi]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import DomainError, FeatureId, _frozen, enumerate_pool
from .normalization import NormalizedSequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    feature_id: FeatureId
    elements: np.ndarray  # (F - 1, 2)

    def __post_init__(self):
        object.__setattr__(self, "elements", _frozen(self.elements))

    def __len__(self):
        return self.elements.shape[0]


def wrap_angle(theta):
    """Map angles into ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=np.float64), 2 * np.pi)


def _check_landmark(i, L):
    if not 0 <= i < L:
        raise DomainError(f"landmark index {i} out of range for {L} landmarks")


def _pair_angles(vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distance and angle of pair vectors shaped ``(F, P, 2)``.

    Where a pair is coincident the previous frame's angle is reused (0 at frame 0).
    """
    d = np.hypot(vec[..., 0], vec[..., 1])
    theta = np.arctan2(vec[..., 1], vec[..., 0])
    degenerate = d == 0.0
    if degenerate.any():
        logger.warning(
            "%d coincident landmark pair(s); reusing the previous frame's angle",
            int(degenerate.sum()),
        )
        theta[0][degenerate[0]] = 0.0
        for f in range(1, theta.shape[0]):
            theta[f][degenerate[f]] = theta[f - 1][degenerate[f]]
    return d, theta


def extract_type_one(seq: NormalizedSequence, i: int) -> FeatureVector:
    _check_landmark(i, seq.num_landmarks)
    pts = seq.frames[:, i, :]
    return FeatureVector(FeatureId(i), pts[1:] - pts[0])


def extract_type_two(seq: NormalizedSequence, i: int, j: int) -> FeatureVector:
    if i == j:
        raise DomainError("type-two feature needs two distinct landmarks")
    _check_landmark(i, seq.num_landmarks)
    _check_landmark(j, seq.num_landmarks)
    if i > j:
        raise DomainError(f"type-two feature needs i < j, got ({i}, {j})")
    vec = (seq.frames[:, j, :] - seq.frames[:, i, :])[:, None, :]
    d, theta = _pair_angles(vec)
    d, theta = d[:, 0], theta[:, 0]
    elements = np.column_stack([d[1:] - d[0], wrap_angle(theta[1:] - theta[0])])
    return FeatureVector(FeatureId(i, j), elements)


def extract_feature(seq: NormalizedSequence, fid: FeatureId) -> FeatureVector:
    if fid.j is None:
        return extract_type_one(seq, fid.i)
    return extract_type_two(seq, fid.i, fid.j)


def feature_matrix(frames: np.ndarray, pool: Sequence[FeatureId] | None = None) -> np.ndarray:
    """Vectorized extraction of many features from one ``(F, L, 2)`` frame array.

    Returns an array of shape ``(len(pool), F - 1, 2)`` whose rows match
    ``extract_feature`` for the corresponding pool entry.
    """
    frames = np.asarray(frames, dtype=np.float64)
    F, L, _ = frames.shape
    if pool is None:
        pool = enumerate_pool(L)
    out = np.empty((len(pool), F - 1, 2))
    if len(pool) == 0:
        return out
    ones = [k for k, f in enumerate(pool) if f.j is None]
    twos = [k for k, f in enumerate(pool) if f.j is not None]
    for k in ones + twos:
        if max(pool[k].landmarks) >= L:
            raise DomainError(f"{pool[k]} is out of range for {L} landmarks")
    if ones:
        idx = np.array([pool[k].i for k in ones])
        disp = frames[1:, idx, :] - frames[0, idx, :]
        out[ones] = disp.transpose(1, 0, 2)
    if twos:
        ii = np.array([pool[k].i for k in twos])
        jj = np.array([pool[k].j for k in twos])
        d, theta = _pair_angles(frames[:, jj, :] - frames[:, ii, :])
        out[twos, :, 0] = (d[1:] - d[0]).T
        out[twos, :, 1] = wrap_angle(theta[1:] - theta[0]).T
    return out


def extract_pool(seq: NormalizedSequence, pool: Sequence[FeatureId] | None = None) -> list[FeatureVector]:
    if pool is None:
        pool = enumerate_pool(seq.num_landmarks)
    mat = feature_matrix(seq.frames, pool)
    return [FeatureVector(fid, mat[k]) for k, fid in enumerate(pool)]
