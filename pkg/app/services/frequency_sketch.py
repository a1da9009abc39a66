"""
app/services/frequency_sketch.py

Counting Bloom filter used by W-TinyLFU to approximate how often each memory
unit is used. A global counter tracks increments; when it reaches the reset
threshold W every counter is halved, so old popularity fades.
"""

from typing import List, Optional, Union

import mmh3
import numpy as np

from app.config import get_settings
from app.utils.exceptions import ConfigurationError
from app.utils.logger import get_logger

logger = get_logger(__name__)

SketchKey = Union[str, bytes]

MAX_COUNTER_CAP = 255  # counters are uint8


def derive_hash_seeds(depth: int, seed: int) -> List[int]:
    """Row seeds for mmh3, fixed by a run-level seed"""
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, 2**32, size=depth, dtype=np.uint64)]


class FrequencySketch:
    """Approximate per-key frequency counter with periodic halving.

    estimate(k) is the minimum over the d counters addressed by k, so it never
    under-counts between resets.
    """

    def __init__(
        self,
        depth: int,
        width: int,
        reset_threshold: int,
        counter_cap: Optional[int] = None,
        seed: int = 0
    ):
        if depth < 1:
            raise ConfigurationError(f"depth must be >= 1, got {depth}", key="depth")
        if width < 1:
            raise ConfigurationError(f"width must be >= 1, got {width}", key="width")
        if reset_threshold < 1:
            raise ConfigurationError(
                f"reset_threshold must be >= 1, got {reset_threshold}", key="reset_threshold"
            )
        if counter_cap is None:
            counter_cap = get_settings().DEFAULT_COUNTER_CAP
        if not 1 <= counter_cap <= MAX_COUNTER_CAP:
            raise ConfigurationError(
                f"counter_cap must be in [1, {MAX_COUNTER_CAP}], got {counter_cap}", key="counter_cap"
            )

        self.depth = depth
        self.width = width
        self.reset_threshold = reset_threshold
        self.counter_cap = counter_cap
        self.hash_seeds = derive_hash_seeds(depth, seed)
        self.counters = np.zeros((depth, width), dtype=np.uint8)
        self.global_count = 0
        self.reset_count = 0
        self._rows = np.arange(depth)

    @classmethod
    def for_capacity(
        cls,
        capacity: int,
        seed: int = 0,
        depth: Optional[int] = None,
        width: Optional[int] = None,
        reset_threshold: Optional[int] = None,
        counter_cap: Optional[int] = None
    ) -> "FrequencySketch":
        """Sketch sized for a cache: width = 8x capacity, W = 10x capacity by default"""
        settings = get_settings()
        return cls(
            depth=depth or settings.SKETCH_DEPTH,
            width=width or settings.SKETCH_WIDTH_FACTOR * capacity,
            reset_threshold=reset_threshold or settings.SKETCH_RESET_FACTOR * capacity,
            counter_cap=counter_cap,
            seed=seed
        )

    def _indexes(self, key: SketchKey) -> np.ndarray:
        return np.fromiter(
            (mmh3.hash(key, seed, signed=False) % self.width for seed in self.hash_seeds),
            dtype=np.int64,
            count=self.depth
        )

    def increment(self, key: SketchKey) -> None:
        columns = self._indexes(key)
        values = self.counters[self._rows, columns]
        open_slots = values < self.counter_cap
        self.counters[self._rows[open_slots], columns[open_slots]] += 1

        self.global_count += 1
        if self.global_count >= self.reset_threshold:
            self.reset_halve()

    def estimate(self, key: SketchKey) -> int:
        return int(self.counters[self._rows, self._indexes(key)].min())

    def reset_halve(self) -> None:
        """c_i <- floor(c_i / 2) for every counter; global count back to 0"""
        np.right_shift(self.counters, 1, out=self.counters)
        self.global_count = 0
        self.reset_count += 1
        logger.debug(f"Sketch halved (reset #{self.reset_count})")

    def snapshot(self) -> np.ndarray:
        return self.counters.copy()
