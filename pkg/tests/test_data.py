import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from geofer.data import (
    Dataset,
    DataError,
    DomainError,
    FeatureId,
    LandmarkSequence,
    ParseError,
    PreconditionError,
    SchemaError,
    enumerate_pool,
    load_dataset,
    pool_size,
    save_dataset,
)

from conftest import random_frames


def test_pool_size_at_52_landmarks():
    pool = enumerate_pool(52)
    assert len(pool) == 1378
    assert sum(not f.is_pair for f in pool) == 52
    assert sum(f.is_pair for f in pool) == 1326


def test_pool_smallest():
    assert enumerate_pool(2) == [FeatureId(0), FeatureId(1), FeatureId(0, 1)]


def test_pool_order_four():
    pool = enumerate_pool(4)
    assert len(pool) == 10
    assert [(f.i, f.j) for f in pool[4:]] == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_pool_rejects_single_landmark():
    with pytest.raises(DomainError):
        enumerate_pool(1)


@given(st.integers(2, 64))
def test_pool_is_canonical(L):
    pool = enumerate_pool(L)
    assert len(pool) == len(set(pool)) == pool_size(L) == L + L * (L - 1) // 2
    assert pool == sorted(pool)
    assert [f.index(L) for f in pool] == list(range(len(pool)))


def test_feature_id_text_roundtrip():
    for fid in enumerate_pool(6):
        assert FeatureId.parse(str(fid)) == fid
    with pytest.raises(ParseError):
        FeatureId.parse("t3:1")


def test_sequence_invariants():
    with pytest.raises(SchemaError):
        LandmarkSequence(np.zeros((1, 3, 2)))
    with pytest.raises(SchemaError):
        LandmarkSequence(np.zeros((3, 1, 2)))
    bad = np.zeros((3, 3, 2))
    bad[1, 1, 0] = np.nan
    with pytest.raises(DataError):
        LandmarkSequence(bad)


def test_dataset_rejects_mixed_landmarks():
    with pytest.raises(SchemaError):
        Dataset((LandmarkSequence(np.zeros((2, 3, 2))), LandmarkSequence(np.zeros((2, 4, 2)))))


def _write(tmp_path, rng, n=3, F=16, L=52):
    seqs = tuple(LandmarkSequence(random_frames(rng, F, L), k % 6, f"p{k}") for k in range(n))
    return Dataset(seqs), save_dataset(Dataset(seqs), tmp_path)


def test_load_dataset_sizes(tmp_path, rng):
    _, manifest = _write(tmp_path, rng)
    ds = load_dataset(manifest)
    assert len(ds) == 3 and ds.num_landmarks == 52
    assert [s.subject_id for s in ds] == ["p0", "p1", "p2"]


def test_roundtrip_is_exact(tmp_path, rng):
    original, manifest = _write(tmp_path / "a", rng, n=4, F=5, L=7)
    loaded = load_dataset(manifest)
    assert loaded == original
    again = load_dataset(save_dataset(loaded, tmp_path / "b"))
    assert again == original


def test_label_by_index(tmp_path, rng):
    _, manifest = _write(tmp_path, rng, n=2, F=3, L=3)
    records = json.loads(manifest.read_text())
    records[1]["label"] = 4
    manifest.write_text(json.dumps(records))
    assert load_dataset(manifest)[1].label == 4


def test_short_frame_names_frame(tmp_path, rng):
    _, manifest = _write(tmp_path, rng, n=1, F=6, L=52)
    csv_path = tmp_path / json.loads(manifest.read_text())[0]["path"]
    lines = csv_path.read_text().splitlines()
    # drop the last landmark of frame 4
    drop = 1 + 4 * 52 + 51
    csv_path.write_text("\n".join(lines[:drop] + lines[drop + 1:]) + "\n")
    with pytest.raises((SchemaError, ParseError), match="frame 4"):
        load_dataset(manifest)


def test_inconsistent_landmarks(tmp_path, rng):
    seqs = (LandmarkSequence(random_frames(rng, 3, 4), 0), LandmarkSequence(random_frames(rng, 3, 5), 1))
    for k, s in enumerate(seqs):
        save_dataset(Dataset((s,)), tmp_path / str(k))
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps([{"path": "0/seq_0000.csv", "label": 0}, {"path": "1/seq_0000.csv", "label": 1}]))
    with pytest.raises(SchemaError):
        load_dataset(manifest)


def test_malformed_row_names_line(tmp_path):
    (tmp_path / "t.csv").write_text("frame,landmark,x,y\n0,0,1,2\n0,1,abc,2\n")
    (tmp_path / "m.json").write_text(json.dumps([{"path": "t.csv", "label": 0}]))
    with pytest.raises(ParseError, match=r"t\.csv:3"):
        load_dataset(tmp_path / "m.json")


def test_non_finite_coordinate(tmp_path):
    (tmp_path / "t.csv").write_text("frame,landmark,x,y\n0,0,1,2\n0,1,nan,2\n1,0,1,2\n1,1,1,2\n")
    (tmp_path / "m.json").write_text(json.dumps([{"path": "t.csv", "label": 0}]))
    with pytest.raises(DataError):
        load_dataset(tmp_path / "m.json")


def test_empty_manifest(tmp_path):
    (tmp_path / "m.json").write_text("[]")
    ds = load_dataset(tmp_path / "m.json")
    assert len(ds) == 0 and ds.num_landmarks is None
    with pytest.raises(PreconditionError):
        ds.require_trainable()


def test_unknown_label(tmp_path, rng):
    _, manifest = _write(tmp_path, rng, n=1, F=3, L=3)
    records = json.loads(manifest.read_text())
    records[0]["label"] = "contempt"
    manifest.write_text(json.dumps(records))
    with pytest.raises(SchemaError):
        load_dataset(manifest)
