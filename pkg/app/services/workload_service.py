"""
app/services/workload_service.py

Synthetic task streams, the simulated agent loop and the metrics computed
over it (memory hit rate, memory retrieval accuracy, reduced exploration and
reduced time).

Per task the agent:
  1. recalls top-K units for the instruction (scored for MRA only, no policy
     bookkeeping),
  2. looks up the target object in memory (one policy query),
  3. acts: a hit goes straight to the object, a miss explores first,
  4. records the object's fresh unit.

With memory=no_short_term the agent skips 1, 2 and 4 and explores for every
task, which gives the short-term ablation baseline (RE = RT = 0).

RE and RT are measured after warm-up (the first step where occupancy
exceeds the threshold), over the whole run if the store never warms. Every
task in that window counts one would-be exploration in e_total and
explore_cost + goto_cost in t_total, so RE equals the post-warm-up hit rate
and RT = RE * explore_cost / (explore_cost + goto_cost).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.config import get_settings
from app.models.experiment_schemas import (
    CostModel,
    Distribution,
    ExperimentReport,
    MemoryMode,
    PolicyParams,
    PoolObject,
    SketchParams,
    StreamParams,
    SweepConfig,
    Task,
    TaskArchetype,
    TaskStream,
)
from app.models.memory_schemas import MemoryUnit, ObjectState
from app.models.policy_schemas import PolicyVariant
from app.services.cache_policies import ReplacementPolicy, WTinyLFUPolicy, create_policy
from app.services.embedding_service import Embedder, default_local_embedder
from app.services.frequency_sketch import FrequencySketch
from app.services.short_term_memory import ShortTermStore
from app.utils.exceptions import ConfigurationError
from app.utils.logger import get_logger, log_event

logger = get_logger(__name__)

OBJECT_TYPES = (
    "Apple", "Tomato", "Potato", "Bread", "Lettuce", "Egg", "Mug", "Cup", "Bowl", "Plate",
    "Pan", "Pot", "Kettle", "Knife", "Fork", "Spoon", "Spatula", "Ladle", "DishSponge",
    "SoapBottle", "Microwave", "Fridge", "Toaster", "CoffeeMachine", "StoveBurner", "Cabinet",
    "Drawer", "Laptop", "Book", "Pencil", "Vase", "Statue", "Candle", "Pillow", "Television",
    "RemoteControl", "Watch", "KeyChain", "CreditCard", "CellPhone", "AlarmClock", "Newspaper",
    "TissueBox", "Towel", "Plunger", "SprayBottle", "WineBottle", "Lamp", "Faucet", "Sink",
)

# verb -> (instruction template, state the object ends up in; None keeps the last one)
VERBS: Tuple[Tuple[str, str, Optional[ObjectState]], ...] = (
    ("bring", "bring the {obj} to me", None),
    ("find", "find the {obj}", None),
    ("wash", "wash the {obj}", ObjectState.CLEANED),
    ("slice", "slice the {obj}", ObjectState.SLICED),
    ("heat", "heat the {obj}", ObjectState.HEATED),
    ("cook", "cook the {obj}", ObjectState.COOKED),
    ("fill", "fill the {obj} with water", ObjectState.FILLED),
    ("open", "open the {obj}", ObjectState.OPENED),
    ("close", "close the {obj}", ObjectState.CLOSED),
    ("turn_on", "turn on the {obj}", ObjectState.ON),
    ("turn_off", "turn off the {obj}", ObjectState.OFF),
    ("use_up", "use up the {obj}", ObjectState.USED_UP),
)

# none of these share a token with an object type
VAGUE_INSTRUCTIONS = (
    "get me a high-calorie snack",
    "hand me the thing I used earlier",
    "put away what is lying around",
    "grab something I can drink from",
    "take care of the last item again",
)


def format_object_id(object_type: str, position: Tuple[float, float, float]) -> str:
    """Object id in the simulator's Type|+XX.XX|+YY.YY|+ZZ.ZZ form"""
    return "|".join([object_type] + [f"{v:+06.2f}" for v in position])


def build_pool(pool_size: int, rng: np.random.Generator) -> List[PoolObject]:
    """Distinct objects; types repeat once the type list is exhausted"""
    pool = []
    seen = set()
    for index in range(pool_size):
        object_type = OBJECT_TYPES[index % len(OBJECT_TYPES)]
        while True:
            position = (
                float(rng.uniform(-3.0, 3.0)),
                float(rng.uniform(0.0, 2.0)),
                float(rng.uniform(-3.0, 3.0)),
            )
            object_id = format_object_id(object_type, position)
            if object_id not in seen:
                break
        seen.add(object_id)
        pool.append(PoolObject(
            object_type=object_type,
            object_id=object_id,
            position=position,
            image_path=f"/short_term/images/{object_type}.jpg",
        ))
    return pool


def zipf_probabilities(n: int, s: float) -> np.ndarray:
    """p_i proportional to 1 / i^s, rank 1 first"""
    weights = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** s
    return weights / weights.sum()


def draw_targets(params: StreamParams, count: int, rng: np.random.Generator) -> np.ndarray:
    n = params.pool_size
    if params.distribution is Distribution.UNIFORM:
        return rng.integers(0, n, size=count)
    if params.distribution is Distribution.ZIPF:
        return rng.choice(n, size=count, p=zipf_probabilities(n, params.zipf_s))
    blocks = rng.integers(0, n, size=math.ceil(count / params.block_length))
    return np.repeat(blocks, params.block_length)[:count]


def generate_stream(params: StreamParams) -> TaskStream:
    """Reproducible task stream; pool index 0 is the most popular object under zipf"""
    rng = np.random.default_rng(params.seed)
    pool = build_pool(params.pool_size, rng)

    if params.archetype is TaskArchetype.SIMPLE:
        targets = draw_targets(params, params.length, rng)
    else:
        heads = draw_targets(params, math.ceil(params.length / params.chain_length), rng)
        targets = np.repeat(heads, params.chain_length)[:params.length]

    verbs = rng.integers(0, len(VERBS), size=params.length)
    vague = rng.random(params.length) < params.ambiguous_fraction
    vague_choice = rng.integers(0, len(VAGUE_INSTRUCTIONS), size=params.length)

    tasks = []
    for i in range(params.length):
        target = pool[int(targets[i])]
        verb, template, state = VERBS[int(verbs[i])]
        instruction = template.format(obj=target.object_type)
        if params.archetype is TaskArchetype.COMPLEX and vague[i]:
            instruction = VAGUE_INSTRUCTIONS[int(vague_choice[i])]
        tasks.append(Task(
            instruction=instruction,
            target_object_id=target.object_id,
            requires_memory=params.archetype is not TaskArchetype.SIMPLE,
            verb=verb,
            resulting_state=state,
        ))

    return TaskStream(tasks=tasks, pool=pool, params=params)


def detect_warmup(occupancy: List[float], threshold: Optional[float] = None) -> Optional[int]:
    """First step whose occupancy strictly exceeds the threshold"""
    threshold = get_settings().WARMUP_OCCUPANCY if threshold is None else threshold
    for step, value in enumerate(occupancy):
        if value > threshold:
            return step
    return None


def build_policy(policy: PolicyParams, sketch: SketchParams, seed: int = 0,
                 trace: bool = False) -> ReplacementPolicy:
    frequency_sketch = None
    if policy.variant is PolicyVariant.W_TINYLFU:
        frequency_sketch = FrequencySketch.for_capacity(
            policy.capacity,
            seed=seed,
            depth=sketch.depth,
            width=sketch.width,
            reset_threshold=sketch.reset_threshold,
            counter_cap=sketch.counter_cap,
        )
    return create_policy(
        policy.variant,
        policy.capacity,
        segment_config=policy.segment_config(),
        sketch=frequency_sketch,
        seed=seed,
        trace=trace,
    )


def run_experiment(
    stream: TaskStream,
    store: ShortTermStore,
    cost_model: Optional[CostModel] = None,
    k: Optional[int] = None,
    warmup_threshold: Optional[float] = None,
    memory: MemoryMode = MemoryMode.FULL
) -> ExperimentReport:
    """
    Drive a fresh store through the stream and measure it

    Args:
        stream: Tasks and the object pool they target
        store: Empty short-term store; its policy does the bookkeeping
        cost_model: Explore/go-to costs (settings defaults when omitted)
        k: Recall top-K used for MRA
        warmup_threshold: Occupancy that ends warm-up (settings default when omitted)
        memory: NO_SHORT_TERM leaves the store untouched, so every task explores

    Returns:
        ExperimentReport with whole-run MHR, post-warm-up RE/RT and the per-step series

    Raises:
        ConfigurationError: If the store already holds units or has answered queries
    """
    settings = get_settings()
    cost_model = cost_model or CostModel(
        explore_cost=settings.DEFAULT_EXPLORE_COST, goto_cost=settings.DEFAULT_GOTO_COST
    )
    k = k or settings.DEFAULT_RECALL_K
    threshold = settings.WARMUP_OCCUPANCY if warmup_threshold is None else warmup_threshold
    policy = store.policy
    if len(store) or policy.queries:
        raise ConfigurationError("run_experiment needs a fresh store", key="store")

    pool = {o.object_id: o for o in stream.pool}
    last_state: Dict[str, ObjectState] = {}
    unit_cache: Dict[Tuple[str, ObjectState], MemoryUnit] = {}

    hits: List[bool] = []
    hit_rate_series: List[float] = []
    occupancy_series: List[float] = []
    mra_eligible = 0
    mra_matched = 0

    for task in stream.tasks:
        target = task.target_object_id
        if memory is MemoryMode.NO_SHORT_TERM:
            hits.append(False)
            hit_rate_series.append(0.0)
            occupancy_series.append(0.0)
            continue

        if task.requires_memory:
            mra_eligible += 1
            recalled = store.recall(task.instruction, k, count_queries=False)
            if recalled and recalled[0].unit.object_id == target:
                mra_matched += 1

        hits.append(store.lookup(target) is not None)

        state = task.resulting_state or last_state.get(target, ObjectState.NONE)
        last_state[target] = state
        unit = unit_cache.get((target, state))
        if unit is None:
            obj = pool[target]
            unit = MemoryUnit(
                object_type=obj.object_type,
                object_id=obj.object_id,
                position=obj.position,
                state=state,
                image_path=obj.image_path,
            )
            unit = unit.model_copy(update={"embedding": store.embedder.embed(unit.text_rendering)})
            unit_cache[(target, state)] = unit
        store.record(unit)

        hit_rate_series.append(policy.hit_rate())
        occupancy_series.append(policy.occupancy())

    warmup_step = detect_warmup(occupancy_series, threshold)
    start = 0
    if warmup_step is not None and warmup_step + 1 < len(hits):
        start = warmup_step + 1
    window_hits = hits[start:]
    e_total = len(window_hits)
    e_reduced = sum(window_hits)
    t_total = e_total * (cost_model.explore_cost + cost_model.goto_cost)
    t_reduced = e_reduced * cost_model.explore_cost
    mhr_post = e_reduced / e_total

    window = main = None
    if isinstance(policy, WTinyLFUPolicy):
        window, main = policy.window_capacity, policy.main_capacity

    report = ExperimentReport(
        policy=policy.variant,
        capacity=policy.capacity,
        window=window,
        main=main,
        seed=stream.params.seed,
        distribution=stream.params.label(),
        memory=memory,
        mhr=policy.hit_rate(),
        mhr_post_warmup=mhr_post,
        mra=mra_matched / mra_eligible if mra_eligible else 0.0,
        re=e_reduced / e_total,
        rt=t_reduced / t_total,
        warmup_step=warmup_step,
        measured_from=start,
        hit_rate_series=hit_rate_series,
        occupancy_series=occupancy_series,
        e_total=e_total,
        e_reduced=e_reduced,
        t_total=t_total,
        t_reduced=t_reduced,
        t_spent=t_total - t_reduced,
    )
    log_event(
        logger,
        f"Experiment {report.label()} finished",
        label=report.label(),
        mhr=round(report.mhr, 6),
        mhr_post_warmup=round(mhr_post, 6),
        mra=round(report.mra, 6),
        re=round(report.re, 6),
        rt=round(report.rt, 6),
        warmup_step=warmup_step,
    )
    return report


def _run_point(stream: TaskStream, policy: PolicyParams, memory: MemoryMode, config: SweepConfig,
               embedder: Embedder) -> ExperimentReport:
    store = ShortTermStore(build_policy(policy, config.sketch, seed=stream.params.seed), embedder=embedder)
    return run_experiment(stream, store, config.cost, k=config.k, memory=memory)


def sweep(config: SweepConfig, jobs: int = 1, embedder: Optional[Embedder] = None) -> List[ExperimentReport]:
    """
    Run every grid point

    Args:
        config: Policies x capacities (x splits) crossed with streams, seeds and memory modes
        jobs: Worker threads; results come back in grid order for any value
        embedder: Shared by every run (local hashing embedder when omitted)

    Returns:
        One report per (stream, seed, policy point, memory mode), in that nesting order
    """
    points = config.policy_points()
    if not points:
        raise ConfigurationError("sweep grid is empty (no split matches any capacity)", key="grid")
    if jobs < 1:
        raise ConfigurationError(f"jobs must be >= 1, got {jobs}", key="jobs")
    embedder = embedder or default_local_embedder()

    work = []
    for stream_params in config.streams:
        for seed in config.seeds:
            stream = generate_stream(stream_params.model_copy(update={"seed": seed}))
            work += [(stream, point, memory) for point in points for memory in config.memory_modes]

    log_event(logger, "Sweep started", grid_points=len(work), jobs=jobs)
    if jobs == 1:
        return [_run_point(stream, point, memory, config, embedder) for stream, point, memory in work]

    with ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(_run_point, stream, point, memory, config, embedder)
                   for stream, point, memory in work]
        return [future.result() for future in futures]
