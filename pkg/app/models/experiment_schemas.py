"""
app/models/experiment_schemas.py

Task streams, the cost model, experiment reports and run/sweep configuration.
"""

from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from app.models.memory_schemas import ObjectState
from app.models.policy_schemas import PolicyVariant, SegmentConfig


class Distribution(str, Enum):
    """How task targets are drawn from the object pool"""
    UNIFORM = "uniform"
    ZIPF = "zipf"
    REPEAT_BLOCK = "repeat_block"


class MemoryMode(str, Enum):
    """Which memories the simulated agent keeps"""
    FULL = "full"
    NO_SHORT_TERM = "no_short_term"    # every task explores; the store is never consulted


class TaskArchetype(str, Enum):
    SIMPLE = "simple"          # unrelated targets
    COMPOSITE = "composite"    # short chains on the same target
    COMPLEX = "complex"        # chains, some phrased without naming the target


class StreamParams(BaseModel):
    """Generator parameters for a synthetic long-sequence task stream"""
    pool_size: int = Field(100, ge=1, description="Number of distinct objects")
    length: int = Field(10000, ge=1, description="Number of tasks")
    distribution: Distribution = Distribution.ZIPF
    zipf_s: float = Field(1.0, gt=0, description="Zipf exponent")
    block_length: int = Field(5, ge=1, description="Repeats per target for repeat_block")
    archetype: TaskArchetype = TaskArchetype.SIMPLE
    chain_length: int = Field(3, ge=1, description="Tasks per target chain (composite/complex)")
    ambiguous_fraction: float = Field(0.25, ge=0, le=1, description="Vague instructions (complex only)")
    seed: int = 0

    def label(self) -> str:
        if self.distribution is Distribution.ZIPF:
            return f"zipf{self.zipf_s:g}"
        if self.distribution is Distribution.REPEAT_BLOCK:
            return f"repeat_block{self.block_length}"
        return self.distribution.value


class PoolObject(BaseModel):
    object_type: str
    object_id: str
    position: Tuple[float, float, float]
    image_path: str


class Task(BaseModel):
    instruction: str = Field(..., min_length=1)
    target_object_id: str
    requires_memory: bool = False
    verb: str = "bring"
    resulting_state: Optional[ObjectState] = Field(None, description="None keeps the last known state")


class TaskStream(BaseModel):
    tasks: List[Task] = Field(..., min_length=1)
    pool: List[PoolObject] = Field(..., min_length=1)
    params: StreamParams

    @model_validator(mode="after")
    def _targets_in_pool(self):
        ids = {o.object_id for o in self.pool}
        for index, task in enumerate(self.tasks):
            if task.target_object_id not in ids:
                raise ValueError(f"task {index} targets {task.target_object_id!r}, which is not in the pool")
        return self


class CostModel(BaseModel):
    """Abstract action costs in time units"""
    explore_cost: float = Field(5.0, gt=0)
    goto_cost: float = Field(1.0, ge=0)


class ExperimentReport(BaseModel):
    policy: PolicyVariant
    capacity: int
    window: Optional[int] = None
    main: Optional[int] = None
    seed: int
    distribution: str
    memory: MemoryMode = MemoryMode.FULL
    mhr: float = Field(..., ge=0, le=1, description="Whole-run hit rate")
    mhr_post_warmup: float = Field(..., ge=0, le=1)
    mra: float = Field(..., ge=0, le=1)
    re: float = Field(..., ge=0, le=1)
    rt: float = Field(..., ge=0, le=1)
    warmup_step: Optional[int] = None
    measured_from: int = Field(0, ge=0, description="First step of the measurement window")
    hit_rate_series: List[float] = Field(default_factory=list)
    occupancy_series: List[float] = Field(default_factory=list)
    e_total: int = Field(..., ge=0)
    e_reduced: int = Field(..., ge=0)
    t_total: float = Field(..., ge=0)
    t_reduced: float = Field(..., ge=0)
    t_spent: float = Field(..., ge=0, description="Time actually spent in the measurement window")

    @model_validator(mode="after")
    def _reductions_bounded(self):
        if self.e_reduced > self.e_total:
            raise ValueError(f"e_reduced ({self.e_reduced}) exceeds e_total ({self.e_total})")
        if self.t_reduced > self.t_total:
            raise ValueError(f"t_reduced ({self.t_reduced}) exceeds t_total ({self.t_total})")
        return self

    def label(self) -> str:
        split = f"[{self.window},{self.main}]" if self.window is not None else f"[{self.capacity}]"
        label = f"{self.policy.value}{split}_{self.distribution}_seed{self.seed}"
        if self.memory is not MemoryMode.FULL:
            label += f"_{self.memory.value}"
        return label


class SketchParams(BaseModel):
    depth: int = Field(4, ge=1)
    width: Optional[int] = Field(None, ge=1, description="Defaults to 8x capacity")
    reset_threshold: Optional[int] = Field(None, ge=1, description="Defaults to 10x capacity")
    counter_cap: int = Field(15, ge=1, le=255)


class PolicyParams(BaseModel):
    variant: PolicyVariant = PolicyVariant.FIFO
    capacity: int = Field(10, ge=1)
    window: Optional[int] = Field(None, ge=1)
    main: Optional[int] = Field(None, ge=1)
    protected_ratio: float = Field(0.8, gt=0, lt=1)

    @model_validator(mode="after")
    def _check_split(self):
        if self.variant is not PolicyVariant.W_TINYLFU:
            return self
        if self.capacity < 2:
            raise ValueError("capacity: W-TinyLFU needs capacity >= 2")
        if (self.window is None) != (self.main is None):
            raise ValueError("window/main: give both or neither")
        if self.window is not None and self.window + self.main != self.capacity:
            raise ValueError(
                f"window/main: {self.window} + {self.main} does not equal capacity {self.capacity}"
            )
        return self

    def segment_config(self) -> Optional[SegmentConfig]:
        if self.variant is not PolicyVariant.W_TINYLFU:
            return None
        if self.window is None:
            return SegmentConfig.default_for(self.capacity, self.protected_ratio)
        return SegmentConfig(window=self.window, main=self.main, protected_ratio=self.protected_ratio)


class OutputParams(BaseModel):
    out: Optional[Path] = None
    trace: Optional[Path] = None


class RunConfig(BaseModel):
    """One simulate run"""
    policy: PolicyParams = Field(default_factory=PolicyParams)
    sketch: SketchParams = Field(default_factory=SketchParams)
    stream: StreamParams = Field(default_factory=StreamParams)
    k: int = Field(3, ge=1, description="Recall top-K")
    cost: CostModel = Field(default_factory=CostModel)
    memory: MemoryMode = MemoryMode.FULL
    output: OutputParams = Field(default_factory=OutputParams)


class SweepConfig(BaseModel):
    """Grid of policy points crossed with streams and seeds"""
    policies: List[PolicyVariant] = Field(..., min_length=1)
    capacities: List[int] = Field(..., min_length=1)
    splits: List[Tuple[int, int]] = Field(default_factory=list, description="W-TinyLFU (window, main) pairs")
    protected_ratio: float = Field(0.8, gt=0, lt=1)
    streams: List[StreamParams] = Field(..., min_length=1)
    seeds: List[int] = Field(..., min_length=1)
    sketch: SketchParams = Field(default_factory=SketchParams)
    k: int = Field(3, ge=1)
    cost: CostModel = Field(default_factory=CostModel)
    memory_modes: List[MemoryMode] = Field(default_factory=lambda: [MemoryMode.FULL], min_length=1)

    @field_validator("capacities")
    @classmethod
    def validate_capacities(cls, v):
        if any(c < 1 for c in v):
            raise ValueError(f"capacities must be >= 1: {v}")
        return v

    @field_validator("splits")
    @classmethod
    def validate_splits(cls, v):
        for window, main in v:
            if window < 1 or main < 1:
                raise ValueError(f"splits need window and main >= 1: [{window},{main}]")
        return v

    def policy_points(self) -> List[PolicyParams]:
        """Expand policies x capacities (x splits for W-TinyLFU) in grid order"""
        points = []
        for variant in self.policies:
            for capacity in self.capacities:
                if variant is not PolicyVariant.W_TINYLFU:
                    points.append(PolicyParams(variant=variant, capacity=capacity))
                    continue
                matching = [(w, m) for w, m in self.splits if w + m == capacity]
                if not self.splits:
                    points.append(PolicyParams(
                        variant=variant, capacity=capacity, protected_ratio=self.protected_ratio
                    ))
                for window, main in matching:
                    points.append(PolicyParams(
                        variant=variant, capacity=capacity, window=window, main=main,
                        protected_ratio=self.protected_ratio
                    ))
        return points
