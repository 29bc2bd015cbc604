"""One test per acceptance criterion; the terminal summary prints PASS/FAIL per line."""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from geofer.boosting import StrongClassifier, samme, samme_alpha, weak_confusion_scores
from geofer.data import Dataset, FeatureId, LandmarkSequence, enumerate_pool
from geofer.dtw import DtwConfig, dtw_distance, lower_bound, nearest_prototype
from geofer.evaluation import run_cv, write_cv_report
from geofer.features import extract_feature
from geofer.normalization import compute_neutral_reference, normalize_dataset
from geofer.pipeline import PipelineConfig, fit_pipeline
from geofer.prototypes import build_prototypes
from geofer.svm import compact_features

from conftest import as_normalized, random_frames
from oracles import brute_force_dtw, classic_adaboost, sort_median

SEED = 20130614


@pytest.fixture(scope="module")
def acc_rng():
    return np.random.default_rng(SEED)


@pytest.fixture(scope="module")
def benchmark_cv(benchmark):
    start = time.perf_counter()
    ada = run_cv(benchmark, 5, PipelineConfig("adaboost-dtw", rounds=50), seed=0, confusion_scores=True)
    svm = run_cv(benchmark, 5, PipelineConfig("svm-boosted", rounds=100), seed=0)
    return ada, svm, time.perf_counter() - start


def test_1_dtw_matches_path_enumeration(acc_rng, record_property):
    start = time.perf_counter()
    worst = 0.0
    for k in range(500):
        kind = FeatureId(1) if k % 2 else FeatureId(0, 2)
        seqs = [as_normalized(random_frames(acc_rng, F=int(acc_rng.integers(2, 10)), L=3)) for _ in range(2)]
        a, b = (extract_feature(s, kind) for s in seqs)
        worst = max(worst, abs(dtw_distance(a, b) - brute_force_dtw(a.elements, b.elements)))
    elapsed = time.perf_counter() - start
    record_property("measured", f"max |diff| {worst:.2e}, {elapsed:.1f} s")
    assert worst <= 1e-9
    assert elapsed < 30


def test_2_lower_bound_and_pruning(acc_rng, record_property):
    violations = 0
    for _ in range(10_000):
        n, m = acc_rng.integers(1, 17, 2)
        a = acc_rng.normal(0, 5, (n, 2))
        b = acc_rng.normal(0, 5, (m, 2))
        cfg = DtwConfig(int(abs(n - m) + acc_rng.integers(0, 5)), tuple(acc_rng.uniform(0.2, 2.0, 2)))
        violations += lower_bound(a, b, cfg) > dtw_distance(a, b, cfg)
    mismatches = 0
    for _ in range(1000):
        T = int(acc_rng.integers(4, 16))
        cfg = DtwConfig(int(acc_rng.integers(1, 5)))
        x = acc_rng.normal(0, 5, (T, 2))
        protos = [acc_rng.normal(0, 5, (T, 2)) * acc_rng.uniform(0.3, 2.0) for _ in range(6)]
        mismatches += nearest_prototype(x, protos, cfg, prune=True) != nearest_prototype(x, protos, cfg, prune=False)
    record_property("measured", f"{violations} bound violations, {mismatches} pruning mismatches")
    assert violations == 0 and mismatches == 0


def test_3_samme_correctness(acc_rng, benchmark_cv, record_property):
    # (a) the alpha formula
    a = samme_alpha(0.5, 6)
    assert abs(a - math.log(5)) <= 1e-12
    # (b) two-class reduction against the classic beta form on identical matrices
    worst = 0.0
    for _ in range(50):
        y = acc_rng.integers(0, 2, 100)
        h = np.tile(y, (40, 1))
        for f, count in enumerate(acc_rng.choice(np.arange(5, 50), 40, replace=False)):
            flip = acc_rng.choice(100, count, replace=False)
            h[f, flip] = 1 - h[f, flip]
        res = samme(h, y, 2, 15)
        chosen, alphas = classic_adaboost(h, y, 15)
        assert res.selected == chosen
        worst = max(worst, float(np.max(np.abs(np.array(res.alphas) / np.array(alphas) - 1))))
    assert worst <= 1e-12
    # (c) every accepted round of every trace produced so far
    ada, svm, _ = benchmark_cv
    rounds = [r for cv in (ada, svm) for fold in cv.folds for r in fold.model.trace.rounds]
    for _ in range(20):
        K = int(acc_rng.integers(2, 8))
        y = acc_rng.integers(0, K, 60)
        preds = np.where(acc_rng.random((30, 60)) < 0.5, y, acc_rng.integers(0, K, (30, 60)))
        res = samme(preds, y, K, 25)
        assert all(0 < e < 1 - 1 / K and al > 0 for e, al in zip(res.errors, res.alphas))
    bad = [r for r in rounds if not (0 < r.err < 1 - 1 / 6 and r.alpha > 0)]
    record_property("measured", f"|alpha - log 5| {abs(a - math.log(5)):.1e}; "
                    f"max rel alpha diff {worst:.1e}; {len(rounds)} trace rounds checked")
    assert not bad


def test_4_pool_and_compact_dimensions(acc_rng, record_property):
    pool = enumerate_pool(52)
    assert len(pool) == 1378 == 52 + 1326
    seq = as_normalized(random_frames(acc_rng, F=16, L=52))
    dims = [compact_features(seq, pool[:M]).shape[0] for M in (100, 200, 400)]
    record_property("measured", f"pool {len(pool)}, dims {dims}")
    assert dims == [200, 400, 800]


def test_5_normalization_invariants(acc_rng, record_property):
    seqs = tuple(LandmarkSequence(random_frames(acc_rng, F=int(acc_rng.integers(2, 20)), L=52, scale=80))
                 for _ in range(200))
    ds = Dataset(seqs)
    ref = compute_neutral_reference(ds)
    normed = normalize_dataset(ds, ref)
    frame0 = max(float(np.abs(x.frames[0] - ref.mean_points).max()) for x in normed)
    disp = max(float(np.abs(np.diff(x.frames, axis=0) - np.diff(s.frames, axis=0)).max())
               for x, s in zip(normed, seqs))
    record_property("measured", f"frame-0 error {frame0:.1e}, displacement error {disp:.1e}")
    assert frame0 <= 1e-9 and disp <= 1e-12


def test_6_median_prototypes(acc_rng, record_property):
    pool = [FeatureId(0), FeatureId(2), FeatureId(0, 1), FeatureId(1, 3)]
    checked = 0
    for k in range(50):
        n = int(acc_rng.integers(1, 12))
        n += (n % 2) != (k % 2)  # alternate even and odd member counts
        train = [as_normalized(random_frames(acc_rng, F=7, L=4), label=0) for _ in range(n)]
        train.append(as_normalized(random_frames(acc_rng, F=7, L=4), label=1))
        protos = build_prototypes(train, pool, ("a", "b"))
        for fid in pool:
            vecs = [extract_feature(s, fid).elements for s in train[:n]]
            got = protos.get(0, fid).elements
            for l in range(6):
                for c in range(2):
                    assert got[l, c] == sort_median([v[l, c] for v in vecs])
                    checked += 1
    record_property("measured", f"{checked} components equal, 50 class samples")


def test_7_synthetic_benchmark(benchmark_cv, record_property):
    ada, svm, elapsed = benchmark_cv
    record_property("measured", f"adaboost-dtw M=50 {100 * ada.mean_accuracy:.2f}%, "
                    f"svm-boosted M=100 {100 * svm.mean_accuracy:.2f}%, {elapsed:.0f} s")
    assert ada.mean_accuracy >= 0.90
    assert svm.mean_accuracy >= 0.90
    assert elapsed < 600


def test_8_confusion_integrity(benchmark, benchmark_cv, tmp_path, record_property):
    ada, svm, _ = benchmark_cv
    worst = 0.0
    for n, cv in enumerate((ada, svm)):
        out = tmp_path / str(n)
        write_cv_report(cv, out)
        for path in sorted(out.glob("*percent.csv")) + sorted(out.glob("confusion_scores.csv")):
            rows = np.loadtxt(path, delimiter=",", skiprows=1, usecols=range(1, 7))
            worst = max(worst, float(np.abs(rows.sum(axis=1) - 100).max()))
        pooled = np.loadtxt(out / "pooled_counts.csv", delimiter=",", skiprows=1, usecols=range(1, 7))
        assert pooled.sum() == len(benchmark)
    normed = normalize_dataset(benchmark, ada.folds[0].model.reference)
    scores = weak_confusion_scores(ada.folds[0].model.strong, normed)
    worst = max(worst, float(np.abs(scores.sum(axis=1) - 100).max()))
    record_property("measured", f"max |row sum - 100| {worst:.1e}")
    assert worst <= 1e-9


def _cli_run(root, threads):
    root.mkdir()
    steps = [
        ["synth", "--out", "data"],
        ["train", "--manifest", "data/manifest.json", "--pipeline", "svm-boosted", "--rounds", "100",
         "--save-prototypes", "--out", "model"],
        ["eval", "--manifest", "data/manifest.json", "--confusion-scores", "--regions", "--out", "eval"],
    ]
    for step in steps:
        proc = subprocess.run([sys.executable, "-m", "geofer", *step, "--threads", str(threads)],
                              cwd=root, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_9_cli_determinism(tmp_path, record_property):
    one = _cli_run(tmp_path / "t1", 1)
    two = _cli_run(tmp_path / "t2", 2)
    differ = [str(p) for p in one if one[p] != two.get(p)]
    record_property("measured", f"{len(one)} files compared, {len(differ)} differ")
    assert set(one) == set(two) and not differ


def test_10_no_leakage(benchmark, benchmark_cv, record_property):
    ada, _, _ = benchmark_cv
    for fold in ada.folds:
        keep = np.setdiff1d(np.arange(len(benchmark)), fold.test_indices)
        # a dataset object that never held the test fold
        alone = fit_pipeline(Dataset(tuple(benchmark.sequences[i] for i in keep), benchmark.class_names),
                             PipelineConfig("adaboost-dtw", rounds=50))
        assert json.dumps(alone.reference.to_json()) == json.dumps(fold.model.reference.to_json())
        assert json.dumps(alone.prototypes.to_json()) == json.dumps(fold.model.prototypes.to_json())
        assert alone.dumps() == fold.model.dumps()
    record_property("measured", f"{len(ada.folds)} folds, references and full prototype sets identical")
