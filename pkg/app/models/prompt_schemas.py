"""
app/models/prompt_schemas.py

Skill descriptions and the prompt bundle handed to the planner.
"""

import keyword
from enum import Enum
from typing import List, Tuple

from pydantic import BaseModel, Field, field_validator


class SkillCategory(str, Enum):
    MANIPULATION = "manipulation"
    NAVIGATION = "navigation"


class SkillSpec(BaseModel):
    """One pre-programmed robot action exposed to the planner"""
    name: str = Field(..., min_length=1)
    params: Tuple[str, ...] = Field(..., description="Ordered parameter names")
    doc: str = ""
    category: SkillCategory

    @field_validator("name")
    @classmethod
    def validate_name(cls, v):
        if not v.isidentifier() or keyword.iskeyword(v):
            raise ValueError(f"skill name must be a Python identifier: {v!r}")
        return v

    @field_validator("params")
    @classmethod
    def validate_params(cls, v):
        if len(set(v)) != len(v):
            raise ValueError(f"duplicate parameter names: {v}")
        for p in v:
            if not p.isidentifier():
                raise ValueError(f"parameter name must be an identifier: {p!r}")
        return v


class PromptBundle(BaseModel):
    """Everything the planner prompt is assembled from, in section order"""
    role_text: str
    skill_api_text: str
    examples_text: str
    memory_note_text: str
    instruction: str = Field(..., description="Natural-language task")
    recalled_units: List[str] = Field(default_factory=list, description="Unit texts, best match first")
    scene_graph_text: str = ""

    @field_validator("instruction")
    @classmethod
    def validate_instruction(cls, v):
        if not v.strip():
            raise ValueError("instruction must not be empty")
        return v
