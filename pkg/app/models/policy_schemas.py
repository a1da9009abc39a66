"""
app/models/policy_schemas.py

Types shared by the replacement policies: variants, segment sizing, and the
records returned by access/insert.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, model_validator


class PolicyVariant(str, Enum):
    """Replacement policies for the short-term memory"""
    FIFO = "fifo"
    FIFO_MERGE = "fifo_merge"
    W_TINYLFU = "w_tinylfu"


class Segment(str, Enum):
    """Where a resident key lives"""
    QUEUE = "queue"
    WINDOW = "window"
    PROBATION = "probation"
    PROTECTED = "protected"


class AccessResult(str, Enum):
    HIT = "hit"
    MISS = "miss"


class SegmentConfig(BaseModel):
    """W-TinyLFU sizing. [9,1] in the experiment tables means window=9, main=1."""

    window: int = Field(..., ge=1, description="Window segment capacity")
    main: int = Field(..., ge=1, description="Main segment capacity (protected + probation)")
    protected_ratio: float = Field(0.8, gt=0, lt=1, description="Share of main given to protected")

    @property
    def capacity(self) -> int:
        return self.window + self.main

    @property
    def protected_capacity(self) -> int:
        # probation always keeps at least one slot
        return min(int(self.main * self.protected_ratio), self.main - 1)

    @property
    def probation_capacity(self) -> int:
        return self.main - self.protected_capacity

    @classmethod
    def default_for(cls, capacity: int, protected_ratio: float = 0.8) -> "SegmentConfig":
        main = max(1, round(capacity * 0.1))
        return cls(window=capacity - main, main=main, protected_ratio=protected_ratio)

    def label(self) -> str:
        return f"[{self.window},{self.main}]"


class EvictionReport(BaseModel):
    """Outcome of an insert"""
    key: str
    evicted: Optional[str] = None
    evicted_segment: Optional[Segment] = None
    merged: bool = False


class ResidentEntry(BaseModel):
    key: str
    segment: Segment


class TraceRecord(BaseModel):
    """One line of the eviction trace"""
    step: int
    op: str
    key: str
    segment: Optional[Segment] = None
    evicted: Optional[str] = None

    @model_validator(mode="after")
    def _check_op(self):
        if self.op not in TRACE_OPS:
            raise ValueError(f"unknown trace op {self.op!r}")
        return self


TRACE_OPS = ("hit", "miss", "insert", "merge", "touch", "evict", "spill", "promote", "demote")
