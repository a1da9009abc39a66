"""
app/services/config_loader.py

INI-style run and sweep configuration files.

    [policy]   variant, capacity, window, main, protected_ratio
    [sketch]   depth, width, reset_threshold, counter_cap
    [stream]   pool_size, length, distribution, zipf_s, block_length,
               archetype, chain_length, ambiguous_fraction, seed
    [recall]   k
    [cost]     explore_cost, goto_cost
    [memory]   mode (full, no_short_term)
    [output]   out, trace

Sweep files drop [policy], [memory] and [output] and add

    [grid]     policies, capacities, splits (9:1, 5:5), seeds,
               distributions (zipf:1.0, uniform, repeat_block:5), protected_ratio,
               memory (full, no_short_term)

Lists are comma separated. Empty values mean "use the default".
"""

import configparser
from pathlib import Path
from typing import Any, Dict, List, Optional, Type, Union

from pydantic import BaseModel, ValidationError

from app.models.experiment_schemas import (
    CostModel,
    OutputParams,
    PolicyParams,
    RunConfig,
    SketchParams,
    StreamParams,
    SweepConfig,
)
from app.utils.exceptions import ConfigurationError
from app.utils.logger import get_logger

logger = get_logger(__name__)

RUN_SECTIONS: Dict[str, Optional[Type[BaseModel]]] = {
    "policy": PolicyParams,
    "sketch": SketchParams,
    "stream": StreamParams,
    "recall": None,
    "cost": CostModel,
    "memory": None,
    "output": OutputParams,
}
SWEEP_SECTIONS = ("grid", "sketch", "stream", "recall", "cost")
GRID_KEYS = ("policies", "capacities", "splits", "seeds", "distributions", "protected_ratio", "memory")


def _read(path: Union[str, Path]) -> configparser.ConfigParser:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}", key="config")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigurationError(f"cannot parse {path}: {e}", key="config") from e
    return parser


def _section(parser: configparser.ConfigParser, name: str) -> Dict[str, str]:
    if not parser.has_section(name):
        return {}
    return {k: v.strip() for k, v in parser.items(name) if v.strip()}


def _check_keys(section: str, values: Dict[str, Any], allowed) -> None:
    for key in values:
        if key not in allowed:
            raise ConfigurationError(f"unknown key {section}.{key}", key=f"{section}.{key}")


def _validation_error(error: ValidationError, prefix: str = "") -> ConfigurationError:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"])
    key = f"{prefix}.{location}" if prefix and location else (prefix or location)
    return ConfigurationError(f"{key}: {first['msg']}", key=key)


def _recall_k(parser: configparser.ConfigParser) -> Dict[str, Any]:
    values = _section(parser, "recall")
    _check_keys("recall", values, ("k",))
    return {"k": values["k"]} if "k" in values else {}


def _memory_mode(parser: configparser.ConfigParser) -> Dict[str, Any]:
    values = _section(parser, "memory")
    _check_keys("memory", values, ("mode",))
    return {"memory": values["mode"]} if "mode" in values else {}


def _split_list(raw: str) -> List[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def parse_distribution(raw: str) -> Dict[str, Any]:
    """'zipf:1.0' / 'repeat_block:5' / 'uniform' -> StreamParams fields"""
    name, _, argument = raw.partition(":")
    name = name.strip()
    fields: Dict[str, Any] = {"distribution": name}
    if argument:
        if name == "zipf":
            fields["zipf_s"] = argument
        elif name == "repeat_block":
            fields["block_length"] = argument
        else:
            raise ConfigurationError(f"distribution {name!r} takes no argument", key="grid.distributions")
    return fields


def load_run_config(path: Union[str, Path], seed: Optional[int] = None) -> RunConfig:
    parser = _read(path)
    for section in parser.sections():
        if section not in RUN_SECTIONS:
            raise ConfigurationError(f"unknown section [{section}]", key=section)

    document: Dict[str, Any] = {}
    for section, model in RUN_SECTIONS.items():
        if model is None:
            continue
        values = _section(parser, section)
        _check_keys(section, values, model.model_fields)
        document[section] = values
    document.update(_recall_k(parser))
    document.update(_memory_mode(parser))
    if seed is not None:
        document["stream"]["seed"] = seed

    try:
        config = RunConfig.model_validate(document)
    except ValidationError as e:
        raise _validation_error(e) from e
    logger.info(f"Loaded run config from {path}")
    return config


def load_sweep_config(path: Union[str, Path], seed: Optional[int] = None) -> SweepConfig:
    parser = _read(path)
    for section in parser.sections():
        if section not in SWEEP_SECTIONS:
            raise ConfigurationError(f"unknown section [{section}]", key=section)
    if not parser.has_section("grid"):
        raise ConfigurationError("sweep config needs a [grid] section", key="grid")

    grid = _section(parser, "grid")
    _check_keys("grid", grid, GRID_KEYS)
    for key in ("policies", "capacities"):
        if key not in grid:
            raise ConfigurationError(f"grid.{key} is required", key=f"grid.{key}")

    stream_base = _section(parser, "stream")
    _check_keys("stream", stream_base, StreamParams.model_fields)
    sketch = _section(parser, "sketch")
    _check_keys("sketch", sketch, SketchParams.model_fields)
    cost = _section(parser, "cost")
    _check_keys("cost", cost, CostModel.model_fields)

    distributions = _split_list(grid.get("distributions", ""))
    streams = [{**stream_base, **parse_distribution(d)} for d in distributions] or [stream_base]

    if seed is not None:
        seeds = [seed]
    elif "seeds" in grid:
        seeds = _split_list(grid["seeds"])
    else:
        seeds = [stream_base.get("seed", 0)]

    splits = []
    for raw in _split_list(grid.get("splits", "")):
        window, _, main = raw.partition(":")
        if not main:
            raise ConfigurationError(f"split {raw!r} must look like window:main", key="grid.splits")
        splits.append((window.strip(), main.strip()))

    document: Dict[str, Any] = {
        "policies": _split_list(grid["policies"]),
        "capacities": _split_list(grid["capacities"]),
        "splits": splits,
        "streams": streams,
        "seeds": seeds,
        "sketch": sketch,
        "cost": cost,
        **_recall_k(parser),
    }
    if "protected_ratio" in grid:
        document["protected_ratio"] = grid["protected_ratio"]
    if "memory" in grid:
        document["memory_modes"] = _split_list(grid["memory"])

    try:
        config = SweepConfig.model_validate(document)
    except ValidationError as e:
        raise _validation_error(e) from e
    try:
        points = config.policy_points()
    except ValidationError as e:
        raise _validation_error(e, prefix="grid") from e
    if not points:
        raise ConfigurationError("grid is empty: no split matches any capacity", key="grid.splits")
    logger.info(f"Loaded sweep config from {path}")
    return config


def is_sweep_config(path: Union[str, Path]) -> bool:
    return _read(path).has_section("grid")
