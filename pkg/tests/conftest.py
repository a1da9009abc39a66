from pathlib import Path

import pytest

from app.models.memory_schemas import MemoryUnit, ObjectState
from app.models.policy_schemas import PolicyVariant
from app.services.cache_policies import create_policy
from app.services.embedding_service import LocalEmbedder
from app.services.scene_graph_service import SceneGraph
from app.services.short_term_memory import ShortTermStore

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def embedder() -> LocalEmbedder:
    return LocalEmbedder()


@pytest.fixture
def make_unit():
    def _make(object_type="Apple", object_id=None, position=(1.10, 0.96, -2.41),
              state=ObjectState.NONE, image_path=None):
        return MemoryUnit(
            object_type=object_type,
            object_id=object_id or f"{object_type}|+00.00|+00.00|+00.00",
            position=position,
            state=state,
            image_path=image_path or f"/short_term/images/{object_type}.jpg",
        )
    return _make


@pytest.fixture
def make_store(embedder):
    def _make(variant=PolicyVariant.FIFO_MERGE, capacity=10, **kwargs):
        return ShortTermStore(create_policy(variant, capacity, **kwargs), embedder=embedder)
    return _make


@pytest.fixture
def example_graph() -> SceneGraph:
    """Three areas around node_1, matching the golden files in fixtures/"""
    graph = SceneGraph()
    graph.add_area("node_1", (2.34, 0.0, 2.23))
    graph.add_area("node_2", (4.1, 0.0, 2.2))
    graph.add_area("node_8", (1.5, 0.0, -0.75))
    graph.add_object("node_1", "bed", (2.0, 0.0, 2.5), volume=1.8)
    graph.add_object("node_1", "table", (2.6, 0.0, 1.9))
    graph.add_object("node_1", "window", (2.34, 1.2, 3.0))
    graph.add_object("node_8", "sofa", (1.2, 0.0, -0.5), volume=2.4)
    graph.add_edge("node_1", "node_2")
    graph.add_edge("node_1", "node_8")
    return graph
