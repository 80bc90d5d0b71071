import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from rggcoupling.streams import child_seed, run_jobs, run_trials, stream


def draw(rng, scale=1.0):
    return float(rng.random() * scale)


def draw_indexed(rng, k, offset=0):
    return (k + offset, float(rng.random()))


def add(a, b):
    return a + b


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**40), label=st.text(max_size=12), idx=st.integers(0, 10**6))
def test_stream_is_reproducible(seed, label, idx):
    a = stream(seed, label, idx).random(4)
    b = stream(seed, label, idx).random(4)
    assert np.array_equal(a, b)


def test_labels_separate_streams():
    base = stream(1, "a", 0).random()
    assert stream(1, "a", 1).random() != base
    assert stream(1, "b", 0).random() != base
    assert stream(2, "a", 0).random() != base
    assert stream(1, "a").random() != base
    assert 0 <= child_seed(1, "x") < 2**63


def test_run_trials_is_order_preserving_and_worker_free():
    serial = run_trials(draw, 5, "t", 12, workers=1, scale=2.0)
    parallel = run_trials(draw, 5, "t", 12, workers=2, scale=2.0)
    assert serial == parallel
    assert serial == [draw(stream(5, "t", k), 2.0) for k in range(12)]
    idx = run_trials(draw_indexed, 5, "t", 6, workers=2, with_index=True, offset=10)
    assert [k for k, _ in idx] == list(range(10, 16))
    assert run_trials(draw, 5, "t", 0) == []


def test_run_jobs():
    jobs = [{"a": k, "b": 2 * k} for k in range(5)]
    assert run_jobs(add, jobs) == run_jobs(add, jobs, workers=2) == [3 * k for k in range(5)]
