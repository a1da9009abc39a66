"""
app/models/graph_schemas.py

Node types of the three-level scene graph: floors, areas, objects.
"""

from typing import Annotated, List, Optional, Tuple

from pydantic import AfterValidator, BaseModel, Field

Position = Tuple[float, float, float]


def _check_name(v: str) -> str:
    if not v or any(ch.isspace() for ch in v):
        raise ValueError(f"node names must be non-empty and contain no whitespace: {v!r}")
    return v


NodeName = Annotated[str, AfterValidator(_check_name)]


class FloorNode(BaseModel):
    name: NodeName


class AreaNode(BaseModel):
    """A reachable region; objects within its radius hang off it"""
    name: NodeName
    position: Position
    floor: NodeName
    contains: List[str] = Field(default_factory=list, description="Object names in insertion order")


class ObjectNode(BaseModel):
    """An immovable entity detected near an area"""
    name: NodeName
    area: NodeName
    position: Position
    volume: Optional[float] = Field(None, ge=0, description="Cubic meters")


class ObservedObject(BaseModel):
    """Flat detection record used to populate the graph"""
    name: NodeName
    position: Position
    volume: Optional[float] = Field(None, ge=0)
