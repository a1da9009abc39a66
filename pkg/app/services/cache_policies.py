"""
app/services/cache_policies.py

Capacity-bounded replacement policies over memory-unit keys:

- FIFO: a queue; the oldest unit leaves when a new one needs room.
- FIFO_MERGE: FIFO, but a unit whose object id is already resident replaces
  the old unit in place instead of evicting anything.
- W_TINYLFU: an LRU window in front of a segmented main area (protected +
  probation). When full, the victim is the key with the lowest sketch
  estimate among window and probation; protected keys are only ever demoted.

Policies never insert on a miss; callers decide when to insert.
"""

import json
from abc import ABC, abstractmethod
from collections import OrderedDict
from typing import Dict, IO, List, Optional

from app.models.policy_schemas import (
    AccessResult,
    EvictionReport,
    PolicyVariant,
    ResidentEntry,
    Segment,
    SegmentConfig,
    TraceRecord,
)
from app.services.frequency_sketch import FrequencySketch
from app.utils.exceptions import ConfigurationError
from app.utils.logger import get_logger

logger = get_logger(__name__)


class ReplacementPolicy(ABC):
    """Common bookkeeping: hit/query counters, step counter, optional trace"""

    variant: PolicyVariant

    def __init__(self, capacity: int, trace: bool = False):
        if capacity < 1:
            raise ConfigurationError(f"capacity must be >= 1, got {capacity}", key="capacity")
        self.capacity = capacity
        self.hits = 0
        self.queries = 0
        self.step = 0
        self.trace: Optional[List[TraceRecord]] = [] if trace else None

    # -- operations ---------------------------------------------------------

    @abstractmethod
    def access(self, key: str) -> AccessResult:
        """Count a query for key; update recency/frequency on a hit"""

    @abstractmethod
    def insert(self, key: str) -> EvictionReport:
        """Make key resident, evicting at most one other key"""

    @abstractmethod
    def resident_keys(self) -> List[ResidentEntry]:
        """Snapshot of resident keys with their segment labels"""

    @abstractmethod
    def __contains__(self, key: str) -> bool:
        ...

    @abstractmethod
    def __len__(self) -> int:
        ...

    @abstractmethod
    def restore(self, entries: List[ResidentEntry]) -> None:
        """Place keys straight into their segments (used when loading a saved store)"""

    def count_miss(self) -> AccessResult:
        """Count a query that had no key to look up (recall on an empty store)"""
        return self._count_query(False)

    def hit_rate(self) -> float:
        if self.queries == 0:
            return 0.0
        return self.hits / self.queries

    def occupancy(self) -> float:
        return len(self) / self.capacity

    def is_warmed(self, threshold: float = 0.95) -> bool:
        """Warmed once occupancy strictly exceeds the threshold"""
        return self.occupancy() > threshold

    # -- helpers ------------------------------------------------------------

    def _count_query(self, hit: bool) -> AccessResult:
        self.step += 1
        self.queries += 1
        if hit:
            self.hits += 1
            return AccessResult.HIT
        return AccessResult.MISS

    def _record(self, op: str, key: str, segment: Optional[Segment] = None,
                evicted: Optional[str] = None) -> None:
        if self.trace is not None:
            self.trace.append(TraceRecord(step=self.step, op=op, key=key, segment=segment, evicted=evicted))

    def write_trace(self, stream: IO[str]) -> int:
        """Write the trace as line-delimited JSON; returns lines written"""
        if self.trace is None:
            return 0
        for record in self.trace:
            stream.write(json.dumps(record.model_dump(mode="json")) + "\n")
        return len(self.trace)

    @staticmethod
    def _check_key(key: str) -> None:
        if not key:
            raise ValueError("unit key must be a non-empty string")


class FIFOPolicy(ReplacementPolicy):
    """Plain queue. Re-inserting a resident key is a no-op."""

    variant = PolicyVariant.FIFO

    def __init__(self, capacity: int, trace: bool = False):
        super().__init__(capacity, trace=trace)
        self.queue: "OrderedDict[str, None]" = OrderedDict()

    def __contains__(self, key: str) -> bool:
        return key in self.queue

    def __len__(self) -> int:
        return len(self.queue)

    def access(self, key: str) -> AccessResult:
        result = self._count_query(key in self.queue)
        self._record(result.value, key, Segment.QUEUE if result is AccessResult.HIT else None)
        return result

    def insert(self, key: str) -> EvictionReport:
        self._check_key(key)
        self.step += 1
        if key in self.queue:
            return self._on_resident_insert(key)

        evicted = None
        if len(self.queue) >= self.capacity:
            evicted, _ = self.queue.popitem(last=False)
            self._record("evict", evicted, Segment.QUEUE)
        self.queue[key] = None
        self._record("insert", key, Segment.QUEUE, evicted)
        return EvictionReport(
            key=key,
            evicted=evicted,
            evicted_segment=Segment.QUEUE if evicted else None
        )

    def _on_resident_insert(self, key: str) -> EvictionReport:
        return EvictionReport(key=key)

    def resident_keys(self) -> List[ResidentEntry]:
        return [ResidentEntry(key=k, segment=Segment.QUEUE) for k in self.queue]

    def restore(self, entries: List[ResidentEntry]) -> None:
        if len(entries) > self.capacity:
            raise ConfigurationError(
                f"{len(entries)} units do not fit capacity {self.capacity}", key="capacity"
            )
        self.queue.clear()
        for entry in entries:
            self._check_key(entry.key)
            self.queue[entry.key] = None


class FIFOMergePolicy(FIFOPolicy):
    """FIFO where a unit for an already-resident object replaces it in place"""

    variant = PolicyVariant.FIFO_MERGE

    def _on_resident_insert(self, key: str) -> EvictionReport:
        self._record("merge", key, Segment.QUEUE)
        return EvictionReport(key=key, merged=True)


class WTinyLFUPolicy(ReplacementPolicy):
    """Window LRU + segmented main (protected / probation) with sketch-based eviction"""

    variant = PolicyVariant.W_TINYLFU

    def __init__(
        self,
        capacity: int,
        segments: SegmentConfig,
        sketch: Optional[FrequencySketch] = None,
        seed: int = 0,
        trace: bool = False
    ):
        super().__init__(capacity, trace=trace)
        if segments.capacity != capacity:
            raise ConfigurationError(
                f"window ({segments.window}) + main ({segments.main}) must equal capacity ({capacity})",
                key="segments"
            )
        self.segments = segments
        self.window_capacity = segments.window
        self.main_capacity = segments.main
        self.protected_capacity = segments.protected_capacity
        self.sketch = sketch or FrequencySketch.for_capacity(capacity, seed=seed)

        # OrderedDict order is LRU -> MRU
        self.window: "OrderedDict[str, None]" = OrderedDict()
        self.probation: "OrderedDict[str, None]" = OrderedDict()
        self.protected: "OrderedDict[str, None]" = OrderedDict()
        self._last_used: Dict[str, int] = {}
        self._tick = 0

    def __contains__(self, key: str) -> bool:
        return key in self.window or key in self.probation or key in self.protected

    def __len__(self) -> int:
        return len(self.window) + len(self.probation) + len(self.protected)

    def segment_of(self, key: str) -> Optional[Segment]:
        if key in self.window:
            return Segment.WINDOW
        if key in self.probation:
            return Segment.PROBATION
        if key in self.protected:
            return Segment.PROTECTED
        return None

    def _touch(self, key: str) -> None:
        self._tick += 1
        self._last_used[key] = self._tick

    def access(self, key: str) -> AccessResult:
        self.sketch.increment(key)
        segment = self.segment_of(key)
        result = self._count_query(segment is not None)
        self._record(result.value, key, segment)
        if segment is None:
            return result

        self._touch(key)
        if segment is Segment.WINDOW:
            self.window.move_to_end(key)
        elif segment is Segment.PROTECTED:
            self.protected.move_to_end(key)
        else:
            self._promote(key)
        return result

    def _promote(self, key: str) -> None:
        """Probation hit moves to protected; protected overflow demotes its LRU key"""
        if self.protected_capacity == 0:
            self.probation.move_to_end(key)
            return
        del self.probation[key]
        if len(self.protected) >= self.protected_capacity:
            demoted, _ = self.protected.popitem(last=False)
            self.probation[demoted] = None
            self._record("demote", demoted, Segment.PROBATION)
        self.protected[key] = None
        self._record("promote", key, Segment.PROTECTED)

    def insert(self, key: str) -> EvictionReport:
        self._check_key(key)
        self.step += 1
        self.sketch.increment(key)

        segment = self.segment_of(key)
        if segment is not None:
            self._touch(key)
            {Segment.WINDOW: self.window, Segment.PROBATION: self.probation,
             Segment.PROTECTED: self.protected}[segment].move_to_end(key)
            self._record("touch", key, segment)
            return EvictionReport(key=key)

        evicted = None
        evicted_segment = None
        if len(self) >= self.capacity:
            evicted, evicted_segment = self._select_victim()
            if evicted_segment is Segment.WINDOW:
                del self.window[evicted]
            else:
                del self.probation[evicted]
            del self._last_used[evicted]
            self._record("evict", evicted, evicted_segment)

        self.window[key] = None
        self._touch(key)
        self._record("insert", key, Segment.WINDOW, evicted)

        if len(self.window) > self.window_capacity:
            spilled, _ = self.window.popitem(last=False)
            self.probation[spilled] = None
            self._record("spill", spilled, Segment.PROBATION)

        return EvictionReport(key=key, evicted=evicted, evicted_segment=evicted_segment)

    def _select_victim(self):
        """Lowest estimate among window and probation; ties go to the least recently used"""
        best_key = None
        best_rank = None
        best_segment = None
        for segment, keys in ((Segment.WINDOW, self.window), (Segment.PROBATION, self.probation)):
            for candidate in keys:
                rank = (self.sketch.estimate(candidate), self._last_used[candidate])
                if best_rank is None or rank < best_rank:
                    best_key, best_rank, best_segment = candidate, rank, segment
        return best_key, best_segment

    def resident_keys(self) -> List[ResidentEntry]:
        entries = [ResidentEntry(key=k, segment=Segment.WINDOW) for k in self.window]
        entries += [ResidentEntry(key=k, segment=Segment.PROBATION) for k in self.probation]
        entries += [ResidentEntry(key=k, segment=Segment.PROTECTED) for k in self.protected]
        return entries

    def restore(self, entries: List[ResidentEntry]) -> None:
        """Rebuild segments from a snapshot. Sketch counts are not restored."""
        targets = {Segment.WINDOW: self.window, Segment.PROBATION: self.probation,
                   Segment.PROTECTED: self.protected, Segment.QUEUE: self.window}
        for segment in targets.values():
            segment.clear()
        self._last_used.clear()
        for entry in entries:
            self._check_key(entry.key)
            targets[entry.segment][entry.key] = None
            self._touch(entry.key)

        if len(self) > self.capacity:
            raise ConfigurationError(f"{len(self)} units do not fit capacity {self.capacity}", key="capacity")
        # a queue snapshot (or a lopsided one) is re-flowed through the window
        while len(self.window) > self.window_capacity:
            spilled, _ = self.window.popitem(last=False)
            self.probation[spilled] = None
        while len(self.protected) > self.protected_capacity:
            demoted, _ = self.protected.popitem(last=False)
            self.probation[demoted] = None
        if len(self.probation) + len(self.protected) > self.main_capacity:
            raise ConfigurationError(
                f"snapshot overflows the main segment ({self.main_capacity})", key="segments"
            )


def create_policy(
    variant: PolicyVariant,
    capacity: int,
    segment_config: Optional[SegmentConfig] = None,
    sketch: Optional[FrequencySketch] = None,
    seed: int = 0,
    trace: bool = False
) -> ReplacementPolicy:
    """Build an empty policy with zeroed statistics.

    Args:
        variant: fifo, fifo_merge or w_tinylfu
        capacity: Maximum resident units
        segment_config: W-TinyLFU window/main split (default split for capacity when omitted)
        sketch: W-TinyLFU frequency sketch (sized from capacity when omitted)
        seed: Sketch hash seed
        trace: Keep an in-memory eviction trace for write_trace

    Returns:
        FIFOPolicy, FIFOMergePolicy or WTinyLFUPolicy

    Raises:
        ConfigurationError: If W-TinyLFU is asked for capacity < 2 or a bad split
    """
    variant = PolicyVariant(variant)
    if variant is PolicyVariant.FIFO:
        policy = FIFOPolicy(capacity, trace=trace)
    elif variant is PolicyVariant.FIFO_MERGE:
        policy = FIFOMergePolicy(capacity, trace=trace)
    else:
        if capacity < 2:
            raise ConfigurationError("W-TinyLFU needs capacity >= 2 (window and main >= 1)", key="capacity")
        segments = segment_config or SegmentConfig.default_for(capacity)
        policy = WTinyLFUPolicy(capacity, segments, sketch=sketch, seed=seed, trace=trace)

    logger.debug(f"Created {variant.value} policy with capacity {capacity}")
    return policy
