"""
app/models/memory_schemas.py

Short-term memory records. A MemoryUnit is one line of the short-term store:
which object, where it is, what state it is in, and the image it came from.
"""

from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

UNIT_NORM_TOLERANCE = 1e-6


class ObjectState(str, Enum):
    """States a vision model may assign to an object of interest"""
    HEATED = "heated"
    COOKED = "cooked"
    SLICED = "sliced"
    CLEANED = "cleaned"
    DIRTY = "dirty"
    FILLED = "filled"
    USED_UP = "used_up"
    OFF = "off"
    ON = "on"
    OPENED = "opened"
    CLOSED = "closed"
    NONE = "none"


class MemoryUnit(BaseModel):
    """One short-term memory record"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    object_type: str = Field(..., min_length=1, description="Object class, e.g. Tomato")
    object_id: str = Field(..., min_length=1, description="Stable identity of the object")
    position: Tuple[float, float, float] = Field(..., description="World coordinates in meters")
    state: ObjectState = ObjectState.NONE
    image_path: str = ""
    embedding: Optional[np.ndarray] = Field(None, description="Unit-norm vector of text_rendering")

    @field_validator("embedding")
    @classmethod
    def validate_embedding(cls, v):
        if v is None:
            return v
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("embedding contains non-finite values")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
            raise ValueError(f"embedding must have unit L2 norm, got {norm:.8f}")
        return v

    @property
    def text_rendering(self) -> str:
        return render_unit_text(self)

    def same_fields(self, other: "MemoryUnit") -> bool:
        """Field-by-field equality, comparing embeddings by value"""
        if (self.object_type, self.object_id, self.position, self.state, self.image_path) != (
            other.object_type, other.object_id, other.position, other.state, other.image_path
        ):
            return False
        if self.embedding is None or other.embedding is None:
            return self.embedding is None and other.embedding is None
        return bool(np.array_equal(self.embedding, other.embedding))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MemoryUnit):
            return NotImplemented
        return self.same_fields(other)

    __hash__ = None


def render_unit_text(unit: MemoryUnit) -> str:
    """Canonical sentence fed to the embedder"""
    x, y, z = unit.position
    return f"{unit.object_type} at position ({x:.2f}, {y:.2f}, {z:.2f}), state: {unit.state.value}"


class RecallResult(BaseModel):
    """A recalled unit and its cosine distance to the query"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    unit: MemoryUnit
    distance: float = Field(..., ge=0.0, le=2.0)
