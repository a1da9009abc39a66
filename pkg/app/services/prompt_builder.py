"""
app/services/prompt_builder.py

Deterministic assembly of the planner prompt. The fixed texts (role,
decomposition examples, memory note, image-state template) are data files
under app/data/prompts and can be replaced without touching code. The role,
examples and memory note are illustrative; the image-state template is the
exact step-by-step wording the state-inference model expects.
"""

import json
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Union

from pydantic import ValidationError

from app.models.memory_schemas import MemoryUnit, RecallResult, render_unit_text
from app.models.prompt_schemas import PromptBundle, SkillSpec
from app.utils.exceptions import RegistryError
from app.utils.logger import get_logger

logger = get_logger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
PROMPTS_DIR = DATA_DIR / "prompts"
SKILLS_FILE = DATA_DIR / "skills.json"

SECTION_HEADERS = (
    "[ROLE]",
    "[SKILL API]",
    "[EXAMPLES]",
    "[MEMORY]",
    "[INSTRUCTION]",
    "[SHORT-TERM MEMORY]",
    "[SCENE GRAPH]",
)
NO_SHORT_TERM_MEMORY = "(no short-term memory)"
EMPTY_SCENE_GRAPH = "(no scene graph)"


class SkillRegistry:
    """Closed, insertion-ordered set of skills"""

    def __init__(self, skills: Sequence[SkillSpec] = ()):
        self._skills: Dict[str, SkillSpec] = {}
        for skill in skills:
            self.register(skill)

    def register(self, skill: SkillSpec) -> None:
        if skill.name in self._skills:
            raise RegistryError(f"skill {skill.name!r} is already registered")
        self._skills[skill.name] = skill

    def get(self, name: str) -> SkillSpec:
        try:
            return self._skills[name]
        except KeyError:
            raise RegistryError(f"unknown skill {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._skills

    def __iter__(self) -> Iterator[SkillSpec]:
        return iter(self._skills.values())

    def __len__(self) -> int:
        return len(self._skills)


def load_skill_registry(path: Optional[Path] = None) -> SkillRegistry:
    path = Path(path) if path else SKILLS_FILE
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
        return SkillRegistry([SkillSpec.model_validate(r) for r in records])
    except (json.JSONDecodeError, ValidationError) as e:
        raise RegistryError(f"invalid skill file {path}: {e}") from e


@lru_cache()
def _default_registry() -> SkillRegistry:
    return load_skill_registry()


def default_skill_registry() -> List[SkillSpec]:
    return list(_default_registry())


def render_skill_api(skills: Optional[Union[SkillRegistry, Sequence[SkillSpec]]] = None) -> str:
    """Python-style stubs, one per registered skill"""
    skills = _default_registry() if skills is None else skills
    blocks = []
    for skill in skills:
        lines = [f"def {skill.name}({', '.join(skill.params)}):"]
        lines += [f"    # {line}" for line in skill.doc.splitlines() if line.strip()]
        lines.append("    pass")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


@lru_cache()
def load_template(name: str) -> str:
    path = PROMPTS_DIR / f"{name}.txt"
    if not path.exists():
        raise FileNotFoundError(f"prompt template not found: {path}")
    return path.read_text(encoding="utf-8").rstrip("\n")


def make_bundle(
    instruction: str,
    recalled: Sequence[Union[MemoryUnit, RecallResult]] = (),
    scene_graph_text: str = "",
    skills: Optional[Union[SkillRegistry, Sequence[SkillSpec]]] = None
) -> PromptBundle:
    """Bundle with the shipped templates and recalled units rendered as text"""
    units = [r.unit if isinstance(r, RecallResult) else r for r in recalled]
    return PromptBundle(
        role_text=load_template("role"),
        skill_api_text=render_skill_api(skills),
        examples_text=load_template("examples"),
        memory_note_text=load_template("memory_note"),
        instruction=instruction,
        recalled_units=[render_unit_text(u) for u in units],
        scene_graph_text=scene_graph_text,
    )


def build_prompt(bundle: PromptBundle) -> str:
    recalled = "\n".join(bundle.recalled_units) if bundle.recalled_units else NO_SHORT_TERM_MEMORY
    bodies = (
        bundle.role_text,
        bundle.skill_api_text,
        bundle.examples_text,
        bundle.memory_note_text,
        bundle.instruction,
        recalled,
        bundle.scene_graph_text or EMPTY_SCENE_GRAPH,
    )
    sections = [f"{header}\n{body}" for header, body in zip(SECTION_HEADERS, bodies)]
    return "\n\n".join(sections) + "\n"


def vlm_state_prompt(task: str) -> str:
    """Image-state template with the task filled in and [Image] left for the caller"""
    if not task or not task.strip():
        raise ValueError("task must not be empty")
    return load_template("vlm_state").replace("[Task]", f'"{task.strip()}"') + "\n"
