import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from geofer.data import DomainError, FeatureId
from geofer.dtw import (
    DtwConfig,
    _dtw_rolling,
    accumulated_cost,
    dtw_distance,
    lower_bound,
    nearest_prototype,
)
from geofer.features import FeatureVector

from oracles import brute_force_dtw

elements = st.integers(1, 8).flatmap(
    lambda n: arrays(np.float64, (n, 2), elements=st.floats(-50, 50, allow_nan=False))
)


def test_identity_is_zero(rng):
    a = rng.normal(size=(11, 2))
    assert dtw_distance(a, a) == 0.0


def test_single_element():
    assert dtw_distance([[0.0, 0.0]], [[3.0, 4.0]]) == 5.0


def test_matches_brute_force(rng):
    for _ in range(60):
        a = rng.normal(size=(rng.integers(1, 9), 2))
        b = rng.normal(size=(rng.integers(1, 9), 2))
        assert dtw_distance(a, b) == pytest.approx(brute_force_dtw(a, b), abs=1e-9)


def test_banded_matches_brute_force(rng):
    for _ in range(60):
        a = rng.normal(size=(rng.integers(1, 9), 2))
        b = rng.normal(size=(rng.integers(1, 9), 2))
        w = abs(len(a) - len(b)) + int(rng.integers(0, 3))
        cfg = DtwConfig(w, (2.0, 0.5))
        assert dtw_distance(a, b, cfg) == pytest.approx(brute_force_dtw(a, b, 2.0, 0.5, w), abs=1e-9)


def test_component_scale():
    cfg = DtwConfig(None, (2.0, 3.0))
    assert dtw_distance([[0.0, 0.0]], [[1.0, 1.0]], cfg) == pytest.approx(np.sqrt(13.0))


def test_rolling_storage_agrees(rng):
    a = rng.normal(size=(40, 2))
    b = rng.normal(size=(33, 2))
    for w in (-1, 7, 12):
        full = dtw_distance(a, b, DtwConfig(None if w < 0 else w))
        assert _dtw_rolling(a, b, 1.0, 1.0, w) == pytest.approx(full, abs=1e-9)


def test_long_sequences_use_rolling_rows(rng):
    a = rng.normal(size=(600, 2))
    b = rng.normal(size=(520, 2))
    d = dtw_distance(a, b, DtwConfig(100))
    assert d == pytest.approx(_dtw_rolling(a, b, 1.0, 1.0, 100))


def test_cost_matrix_corner(rng):
    a, b = rng.normal(size=(6, 2)), rng.normal(size=(5, 2))
    acc = accumulated_cost(a, b, DtwConfig(2))
    assert acc.shape == (6, 5)
    assert acc[-1, -1] == dtw_distance(a, b, DtwConfig(2))
    assert np.isinf(acc[5, 0])


def test_errors():
    with pytest.raises(DomainError):
        dtw_distance(np.empty((0, 2)), [[0.0, 0.0]])
    with pytest.raises(DomainError, match="at least 3"):
        dtw_distance(np.zeros((5, 2)), np.zeros((2, 2)), DtwConfig(1))
    with pytest.raises(DomainError):
        DtwConfig(-1)
    with pytest.raises(DomainError):
        DtwConfig(None, (0.0, 1.0))
    with pytest.raises(DomainError):
        dtw_distance(FeatureVector(FeatureId(0), np.zeros((3, 2))), FeatureVector(FeatureId(0, 1), np.zeros((3, 2))))
    with pytest.raises(DomainError):
        lower_bound(np.zeros((3, 2)), np.zeros((3, 2)), DtwConfig())


@settings(max_examples=200, deadline=None)
@given(elements, elements)
def test_symmetry_and_non_negativity(a, b):
    d = dtw_distance(a, b)
    assert d >= 0
    assert d == pytest.approx(dtw_distance(b, a), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(elements, elements, st.integers(0, 4))
def test_widening_band_never_increases(a, b, extra):
    w = abs(len(a) - len(b)) + extra
    narrow = dtw_distance(a, b, DtwConfig(w))
    assert dtw_distance(a, b, DtwConfig(w + 1)) <= narrow + 1e-12
    assert dtw_distance(a, b) <= narrow + 1e-12


@settings(max_examples=300, deadline=None)
@given(elements, elements, st.integers(0, 4))
def test_lower_bound_is_sound(a, b, extra):
    cfg = DtwConfig(abs(len(a) - len(b)) + extra, (1.0, 0.7))
    assert lower_bound(a, b, cfg) <= dtw_distance(a, b, cfg) + 1e-9


def test_lower_bound_identity(rng):
    a = rng.normal(size=(9, 2))
    assert lower_bound(a, a, DtwConfig(2)) == 0.0


def test_lower_bound_constant_sequences():
    a = np.zeros((5, 2))
    b = np.zeros((5, 2))
    b[:, 0] = 1.0
    cfg = DtwConfig(5)
    assert lower_bound(a, b, cfg) == 5.0 == dtw_distance(a, b, cfg)


def test_nearest_exact_match(rng):
    protos = [rng.normal(size=(8, 2)) for _ in range(4)]
    assert nearest_prototype(protos[2].copy(), protos) == 2


def test_nearest_tie_goes_low():
    x = np.zeros((3, 2))
    up = np.ones((3, 2))
    assert nearest_prototype(x, [up * 5, up, -up]) == 1
    assert nearest_prototype(x, [up * 5, up, -up], DtwConfig(1)) == 1


def test_nearest_prune_agrees(rng):
    for _ in range(300):
        cfg = DtwConfig(int(rng.integers(0, 4)))
        x = rng.normal(size=(10, 2))
        protos = [rng.normal(size=(10, 2)) * rng.uniform(0.2, 2) for _ in range(6)]
        assert nearest_prototype(x, protos, cfg, prune=True) == nearest_prototype(x, protos, cfg, prune=False)


def test_nearest_mixed_lengths(rng):
    x = rng.normal(size=(7, 2))
    protos = [rng.normal(size=(n, 2)) for n in (5, 9, 7)]
    dists = [dtw_distance(x, p) for p in protos]
    assert nearest_prototype(x, protos) == int(np.argmin(dists))


def test_nearest_empty():
    with pytest.raises(DomainError):
        nearest_prototype(np.zeros((2, 2)), [])
