import numpy as np
import pytest

from geofer.data import Dataset, LandmarkSequence
from geofer.normalization import NormalizedSequence
from geofer.synthgen import SynthSpec, generate


def random_frames(rng, F=8, L=5, scale=50.0):
    base = rng.uniform(0, 200, (L, 2))
    return base + np.cumsum(rng.normal(0, scale / 10, (F, L, 2)), axis=0)


def as_normalized(frames, label=None):
    frames = np.asarray(frames, dtype=float)
    return NormalizedSequence(frames, np.zeros(frames.shape[1:]), label)


@pytest.fixture
def rng():
    return np.random.default_rng(20130614)


@pytest.fixture
def small_dataset(rng):
    seqs = [LandmarkSequence(random_frames(rng, F=int(rng.integers(3, 9))), label=k % 3, subject_id=f"s{k}")
            for k in range(9)]
    return Dataset(tuple(seqs), ("a", "b", "c"))


@pytest.fixture(scope="session")
def benchmark():
    return generate(SynthSpec())


_acceptance = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        detail = "; ".join(str(v) for k, v in report.user_properties if k == "measured")
        _acceptance[report.nodeid.split("::")[-1]] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, (outcome, detail) in sorted(_acceptance.items(), key=lambda kv: int(kv[0].split("_")[1])):
        line = f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
