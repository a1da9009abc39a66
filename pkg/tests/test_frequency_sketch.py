from collections import Counter

import numpy as np
import pytest

from app.services.frequency_sketch import FrequencySketch, derive_hash_seeds
from app.utils.exceptions import ConfigurationError


@pytest.mark.parametrize("kwargs, key", [
    ({"depth": 0, "width": 8, "reset_threshold": 10}, "depth"),
    ({"depth": 4, "width": 0, "reset_threshold": 10}, "width"),
    ({"depth": 4, "width": 8, "reset_threshold": 0}, "reset_threshold"),
    ({"depth": 4, "width": 8, "reset_threshold": 10, "counter_cap": 0}, "counter_cap"),
    ({"depth": 4, "width": 8, "reset_threshold": 10, "counter_cap": 256}, "counter_cap"),
])
def test_invalid_parameters_are_rejected(kwargs, key):
    with pytest.raises(ConfigurationError) as info:
        FrequencySketch(**kwargs)
    assert info.value.key == key


def test_for_capacity_uses_default_sizing():
    sketch = FrequencySketch.for_capacity(10)
    assert sketch.counters.shape == (4, 80)
    assert sketch.reset_threshold == 100
    assert sketch.counter_cap == 15


def test_estimate_is_one_sided_and_mostly_exact():
    rng = np.random.default_rng(7)
    keys = [f"obj-{i}" for i in range(100)]
    sketch = FrequencySketch(depth=4, width=2048, reset_threshold=10**6, counter_cap=255, seed=3)
    exact = Counter()
    for index in rng.integers(0, 100, size=10_000):
        key = keys[int(index)]
        exact[key] += 1
        sketch.increment(key)

    assert all(c < 255 for c in exact.values())
    errors = [sketch.estimate(k) - exact[k] for k in keys]
    assert all(e >= 0 for e in errors)
    assert sum(e == 0 for e in errors) >= 99


def test_counters_saturate_at_cap():
    sketch = FrequencySketch(depth=4, width=64, reset_threshold=10**6, counter_cap=15)
    for _ in range(40):
        sketch.increment("apple")
    assert sketch.estimate("apple") == 15
    assert sketch.counters.max() == 15


def test_reset_halves_with_floor():
    sketch = FrequencySketch(depth=4, width=4096, reset_threshold=50, counter_cap=255, seed=1)
    counts = {"a": 21, "b": 13, "c": 9, "d": 6}
    sequence = [k for k, n in counts.items() for _ in range(n)]
    assert len(sequence) == 49

    for key in sequence:
        sketch.increment(key)
    assert sketch.reset_count == 0
    before = sketch.snapshot()

    sketch.increment("e")  # 50th increment triggers the reset
    assert sketch.reset_count == 1
    assert sketch.global_count == 0

    expected = before.copy()
    for row, column in enumerate(sketch._indexes("e")):
        expected[row, column] += 1
    np.testing.assert_array_equal(sketch.counters, expected // 2)

    # exact-counter oracle, no collisions at this width
    for key, n in counts.items():
        assert sketch.estimate(key) == n // 2
    assert sketch.estimate("e") == 0


def test_same_seed_gives_same_counters():
    first = FrequencySketch(depth=4, width=32, reset_threshold=1000, seed=9)
    second = FrequencySketch(depth=4, width=32, reset_threshold=1000, seed=9)
    for key in ["x", "y", "z", "x"]:
        first.increment(key)
        second.increment(key)
    np.testing.assert_array_equal(first.counters, second.counters)


def test_hash_seeds_are_deterministic_and_distinct():
    seeds = derive_hash_seeds(4, seed=0)
    assert seeds == derive_hash_seeds(4, seed=0)
    assert len(set(seeds)) == 4
    assert all(0 <= s < 2**32 for s in seeds)
