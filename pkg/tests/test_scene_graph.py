import numpy as np
import pytest

from app.models.graph_schemas import ObservedObject
from app.services.scene_graph_service import (
    SceneGraph,
    check_graph,
    dumps,
    ingest_objects,
    load,
    loads,
    render_area_node,
    save,
    serialize_to_prompt,
)
from app.utils.exceptions import SceneGraphError, SerializationError


def test_prompt_matches_golden(example_graph, fixtures_dir):
    golden = (fixtures_dir / "scene_graph_prompt.txt").read_text(encoding="utf-8")
    assert serialize_to_prompt(example_graph) + "\n" == golden


def test_first_area_record(example_graph):
    assert render_area_node(example_graph, "node_1") == (
        "{name: node_1, type: Area, contains: [bed, table, window], "
        "adjacent nodes: [node_2, node_8], position: [2.34, 0.00, 2.23]}"
    )


def test_contains_truncation(example_graph):
    record = render_area_node(example_graph, "node_1", max_contains=2)
    assert "contains: [bed, table, ...]" in record


def test_empty_graph_prompt():
    assert serialize_to_prompt(SceneGraph()) == "Area nodes:\nEdges:\n{}"


def test_save_matches_golden(example_graph, fixtures_dir, tmp_path):
    path = tmp_path / "graph.txt"
    save(example_graph, path)
    assert path.read_text(encoding="utf-8") == (fixtures_dir / "scene_graph.txt").read_text(encoding="utf-8")
    assert load(path) == example_graph


def test_load_preserves_insertion_order(fixtures_dir, example_graph):
    graph = load(fixtures_dir / "scene_graph.txt")
    assert list(graph.areas) == ["node_1", "node_2", "node_8"]
    assert graph.areas["node_1"].contains == ["bed", "table", "window"]
    assert graph.objects["table"].volume is None
    assert serialize_to_prompt(graph) == serialize_to_prompt(example_graph)


def test_add_edge_is_idempotent(example_graph):
    example_graph.add_edge("node_1", "node_2")
    example_graph.add_edge("node_2", "node_1")
    assert len(example_graph.edges) == 2
    assert example_graph.adjacent("node_2") == ["node_1"]


@pytest.mark.parametrize("a, b", [("node_1", "node_1"), ("node_1", "bed"), ("node_1", "node_9")])
def test_invalid_edges(example_graph, a, b):
    with pytest.raises(SceneGraphError):
        example_graph.add_edge(a, b)


def test_integrity_errors(example_graph):
    with pytest.raises(SceneGraphError, match="duplicate"):
        example_graph.add_area("bed", (0.0, 0.0, 0.0))
    with pytest.raises(SceneGraphError, match="missing floor"):
        example_graph.add_area("node_3", (0.0, 0.0, 0.0), floor="floor_9")
    with pytest.raises(SceneGraphError, match="missing area"):
        example_graph.add_object("node_9", "lamp", (0.0, 0.0, 0.0))
    with pytest.raises(SceneGraphError):
        example_graph.add_area("living room", (0.0, 0.0, 0.0))
    with pytest.raises(SceneGraphError):
        example_graph.remove_node("ghost")


def test_remove_area_cascades(example_graph):
    example_graph.remove_node("node_1")
    assert "bed" not in example_graph.objects
    assert example_graph.edges == []
    assert example_graph.adjacent("node_8") == []
    assert list(example_graph.objects) == ["sofa"]

    example_graph.remove_node("sofa")
    assert example_graph.areas["node_8"].contains == []

    example_graph.remove_node("floor_1")
    assert len(example_graph) == 0


def test_navigable(example_graph):
    example_graph.add_area("node_5", (9.0, 0.0, 9.0))
    assert example_graph.navigable("node_2", "node_8")
    assert example_graph.navigable("node_5", "node_5")
    assert not example_graph.navigable("node_2", "node_5")
    with pytest.raises(SceneGraphError):
        example_graph.navigable("node_1", "bed")


def _reachable(edges, start):
    seen = {start}
    frontier = [start]
    while frontier:
        current = frontier.pop()
        for a, b in edges:
            for x, y in ((a, b), (b, a)):
                if x == current and y not in seen:
                    seen.add(y)
                    frontier.append(y)
    return seen


@pytest.mark.slow
def test_navigable_matches_search_oracle():
    rng = np.random.default_rng(5)
    mismatches = 0
    for _ in range(50):
        graph = SceneGraph()
        n = int(rng.integers(2, 15))
        names = [f"area_{i}" for i in range(n)]
        for name in names:
            graph.add_area(name, tuple(float(v) for v in rng.uniform(-5, 5, size=3)))
        for _ in range(int(rng.integers(0, n + 3))):
            a, b = rng.choice(n, size=2, replace=False)
            graph.add_edge(names[a], names[b])
        for a in names:
            reachable = _reachable(graph.edges, a)
            mismatches += sum(graph.navigable(a, b) != (b in reachable) for b in names)
    assert mismatches == 0


def test_ingest_attaches_to_nearest_area_within_radius():
    graph = SceneGraph()
    graph.add_area("node_1", (0.0, 0.0, 0.0))
    graph.add_area("node_2", (3.0, 0.0, 0.0))
    skipped = ingest_objects(graph, [
        ObservedObject(name="cup", position=(0.5, 0.0, 0.0)),
        ObservedObject(name="lamp", position=(2.6, 0.0, 0.0), volume=0.1),
        ObservedObject(name="rock", position=(10.0, 0.0, 0.0)),
    ], radius=1.5)

    assert skipped == ["rock"]
    assert graph.areas["node_1"].contains == ["cup"]
    assert graph.areas["node_2"].contains == ["lamp"]
    assert graph.objects["lamp"].volume == 0.1


def test_ingest_without_areas_skips_everything():
    assert ingest_objects(SceneGraph(), [ObservedObject(name="cup", position=(0.0, 0.0, 0.0))]) == ["cup"]
    assert ingest_objects(SceneGraph(), []) == []


def test_check_graph(example_graph):
    assert check_graph(example_graph) == []
    example_graph.edges.append(("node_1", "ghost"))
    problems = check_graph(example_graph)
    assert len(problems) == 1
    assert "ghost" in problems[0]


def test_truncated_file_is_rejected(fixtures_dir):
    lines = (fixtures_dir / "scene_graph.txt").read_text(encoding="utf-8").splitlines()
    with pytest.raises(SerializationError, match="missing end marker"):
        loads("\n".join(lines[:-1]))
    with pytest.raises(SerializationError, match="end marker counts 9"):
        loads("\n".join(lines[:-1] + ["end 9"]))
    with pytest.raises(SerializationError, match="header"):
        loads("\n".join(lines[1:]))


def test_dangling_edge(fixtures_dir):
    text = (fixtures_dir / "scene_graph_dangling.txt").read_text(encoding="utf-8")
    with pytest.raises(SerializationError) as info:
        loads(text)
    assert info.value.location == "line 6"

    graph, problems = loads(text, strict=False)
    assert len(problems) == 1
    assert problems[0].startswith("line 6:")
    assert graph.edges == [("node_1", "node_2")]


def test_malformed_lines():
    with pytest.raises(SerializationError, match="unrecognized line"):
        loads("# scene-memory scene-graph v1\nroom kitchen\nend 1\n")
    with pytest.raises(SerializationError, match="non-numeric coordinate"):
        loads("# scene-memory scene-graph v1\nfloor f\narea a floor=f position=[1, x, 2]\nend 2\n")


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load(tmp_path / "absent.txt")


def test_dumps_round_trip(example_graph):
    graph, problems = loads(dumps(example_graph))
    assert problems == []
    assert graph == example_graph
    assert graph.edges == example_graph.edges


def _random_position(rng):
    return tuple(float(v) for v in rng.uniform(-20, 20, size=3))


def test_large_graph_save_and_load(tmp_path):
    rng = np.random.default_rng(23)
    graph = SceneGraph()
    for f in range(3):
        graph.add_floor(f"floor_{f}")
    areas = [f"area_{i}" for i in range(20)]
    for i, name in enumerate(areas):
        graph.add_area(name, _random_position(rng), floor=f"floor_{i % 3}")
    for i in range(100):
        volume = float(rng.uniform(0.01, 2.0)) if i % 2 else None
        graph.add_object(areas[int(rng.integers(20))], f"object_{i}", _random_position(rng), volume=volume)
    for _ in range(30):
        a, b = rng.choice(20, size=2, replace=False)
        graph.add_edge(areas[a], areas[b])

    path = tmp_path / "house.txt"
    save(graph, path)
    loaded = load(path)

    assert loaded == graph
    assert loaded.edges == graph.edges
    assert list(loaded.objects) == list(graph.objects)
    assert dumps(loaded) == path.read_text(encoding="utf-8")
    assert serialize_to_prompt(loaded) == serialize_to_prompt(graph)


@pytest.mark.slow
def test_random_edits_keep_references_intact():
    rng = np.random.default_rng(31)
    graph = SceneGraph()
    counter = 0
    for _ in range(2000):
        op = int(rng.integers(6))
        names = list(graph.floors) + list(graph.areas) + list(graph.objects)
        counter += 1
        if op == 0:
            graph.add_floor(f"floor_{counter}")
        elif op == 1 and graph.floors:
            floors = list(graph.floors)
            graph.add_area(f"area_{counter}", _random_position(rng), floor=floors[int(rng.integers(len(floors)))])
        elif op == 2 and graph.areas:
            areas = list(graph.areas)
            graph.add_object(areas[int(rng.integers(len(areas)))], f"object_{counter}", _random_position(rng))
        elif op == 3 and len(graph.areas) >= 2:
            a, b = rng.choice(list(graph.areas), size=2, replace=False)
            graph.add_edge(str(a), str(b))
        elif op in (4, 5) and names:
            graph.remove_node(names[int(rng.integers(len(names)))])

        assert check_graph(graph) == []
        for area in graph.areas.values():
            assert all(graph.objects[o].area == area.name for o in area.contains)
        assert all(a in graph.areas and b in graph.areas for a, b in graph.edges)
        assert len(graph.edges) == len(graph._edge_set)
