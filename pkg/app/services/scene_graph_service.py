"""
app/services/scene_graph_service.py

Long-term memory: a hierarchical topological graph of floors, areas and
objects, with undirected navigability edges between areas.

The prompt serialization is bit-exact, one record per area:

    {name: node_1, type: Area, contains: [bed, table, window], adjacent nodes: [node_2, node_8], position: [2.34, 0.00, 2.23]}

followed by the edge list:

    {node_1 ↔ node_2, node_1 ↔ node_8}

Save file format (line oriented, insertion order, floors/areas/objects/edges):

    # scene-memory scene-graph v1
    floor <name>
    area <name> floor=<floor> position=[x, y, z]
    object <name> area=<area> position=[x, y, z] volume=<float|none>
    edge <a> <b>
    end <record count>
"""

import re
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order
from scipy.spatial import cKDTree

from app.config import get_settings
from app.models.graph_schemas import AreaNode, FloorNode, ObjectNode, ObservedObject, Position
from app.utils.exceptions import SceneGraphError, SerializationError
from app.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_FLOOR = "floor_1"
FILE_HEADER = "# scene-memory scene-graph v1"
EDGE_SEPARATOR = " ↔ "

_FLOOR_LINE = re.compile(r"^floor (\S+)$")
_AREA_LINE = re.compile(r"^area (\S+) floor=(\S+) position=\[([^\]]*)\]$")
_OBJECT_LINE = re.compile(r"^object (\S+) area=(\S+) position=\[([^\]]*)\] volume=(\S+)$")
_EDGE_LINE = re.compile(r"^edge (\S+) (\S+)$")
_END_LINE = re.compile(r"^end (\d+)$")


class SceneGraph:
    """G = (V, E) with V = floors ∪ areas ∪ objects, names unique across levels"""

    def __init__(self):
        self.floors: Dict[str, FloorNode] = {}
        self.areas: Dict[str, AreaNode] = {}
        self.objects: Dict[str, ObjectNode] = {}
        self.edges: List[Tuple[str, str]] = []
        self._edge_set: Set[frozenset] = set()

    # -- construction ---------------------------------------------------------

    def _check_free(self, name: str) -> None:
        if name in self.floors or name in self.areas or name in self.objects:
            raise SceneGraphError(f"duplicate node name {name!r}")

    def add_floor(self, name: str) -> None:
        self._check_free(name)
        self.floors[name] = _build(FloorNode, name=name)

    def add_area(self, name: str, position: Position, floor: Optional[str] = None) -> None:
        self._check_free(name)
        if floor is None:
            floor = DEFAULT_FLOOR
            if floor not in self.floors:
                self.add_floor(floor)
        elif floor not in self.floors:
            raise SceneGraphError(f"area {name!r} references missing floor {floor!r}")
        self.areas[name] = _build(AreaNode, name=name, position=position, floor=floor)

    def add_object(self, area: str, name: str, position: Position, volume: Optional[float] = None) -> None:
        if area not in self.areas:
            raise SceneGraphError(f"object {name!r} references missing area {area!r}")
        self._check_free(name)
        self.objects[name] = _build(ObjectNode, name=name, area=area, position=position, volume=volume)
        self.areas[area].contains.append(name)

    def add_edge(self, a: str, b: str) -> None:
        """Undirected navigability edge; adding an existing edge is a no-op"""
        for name in (a, b):
            if name not in self.areas:
                raise SceneGraphError(f"edge endpoint {name!r} is not an area")
        if a == b:
            raise SceneGraphError(f"self-loop on {a!r}")
        pair = frozenset((a, b))
        if pair in self._edge_set:
            return
        self._edge_set.add(pair)
        self.edges.append((a, b))

    def remove_node(self, name: str) -> None:
        """Remove a node and everything that depends on it"""
        if name in self.objects:
            node = self.objects.pop(name)
            self.areas[node.area].contains.remove(name)
        elif name in self.areas:
            node = self.areas.pop(name)
            for object_name in node.contains:
                del self.objects[object_name]
            self.edges = [e for e in self.edges if name not in e]
            self._edge_set = {p for p in self._edge_set if name not in p}
        elif name in self.floors:
            for area_name in [a.name for a in self.areas.values() if a.floor == name]:
                self.remove_node(area_name)
            del self.floors[name]
        else:
            raise SceneGraphError(f"unknown node {name!r}")
        logger.debug(f"Removed node {name}")

    # -- queries --------------------------------------------------------------

    def adjacent(self, area: str) -> List[str]:
        """Neighbors of an area in edge insertion order"""
        neighbors = []
        for a, b in self.edges:
            if a == area:
                neighbors.append(b)
            elif b == area:
                neighbors.append(a)
        return neighbors

    def navigable(self, a: str, b: str) -> bool:
        """True iff a path of navigability edges joins a and b"""
        for name in (a, b):
            if name not in self.areas:
                raise SceneGraphError(f"unknown area {name!r}")
        if a == b:
            return True

        names = list(self.areas)
        index = {n: i for i, n in enumerate(names)}
        rows = [index[x] for x, _ in self.edges]
        cols = [index[y] for _, y in self.edges]
        adjacency = csr_matrix(
            (np.ones(len(rows), dtype=np.int8), (rows, cols)),
            shape=(len(names), len(names))
        )
        reachable = breadth_first_order(adjacency, index[a], directed=False, return_predecessors=False)
        return index[b] in set(reachable.tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SceneGraph):
            return NotImplemented
        return (
            self.floors == other.floors
            and self.areas == other.areas
            and self.objects == other.objects
            and self._edge_set == other._edge_set
        )

    def __len__(self) -> int:
        return len(self.floors) + len(self.areas) + len(self.objects)


def _build(model, **fields):
    try:
        return model(**fields)
    except ValidationError as e:
        raise SceneGraphError(str(e)) from e


# -- prompt serialization -----------------------------------------------------

def _format_position(position: Position) -> str:
    return "[" + ", ".join(f"{v:.2f}" for v in position) + "]"


def render_area_node(graph: SceneGraph, name: str, max_contains: Optional[int] = None) -> str:
    area = graph.areas[name]
    contains = list(area.contains)
    if max_contains is not None and len(contains) > max_contains:
        contains = contains[:max_contains] + ["..."]
    return (
        f"{{name: {area.name}, type: Area, contains: [{', '.join(contains)}], "
        f"adjacent nodes: [{', '.join(graph.adjacent(name))}], "
        f"position: {_format_position(area.position)}}}"
    )


def render_edges(graph: SceneGraph) -> str:
    return "{" + ", ".join(f"{a}{EDGE_SEPARATOR}{b}" for a, b in graph.edges) + "}"


def serialize_to_prompt(graph: SceneGraph, max_contains: Optional[int] = None) -> str:
    """Area records in insertion order, then the edge list.

    Args:
        graph: Scene graph to render; floors and object positions are left out
        max_contains: Cap on object names per area, the rest shown as "..."

    Returns:
        "Area nodes:" with one record per line, then "Edges:" and the
        {a ↔ b, ...} set; no trailing newline
    """
    lines = ["Area nodes:"]
    lines += [render_area_node(graph, name, max_contains) for name in graph.areas]
    lines.append("Edges:")
    lines.append(render_edges(graph))
    return "\n".join(lines)


# -- ingestion ----------------------------------------------------------------

def ingest_objects(graph: SceneGraph, objects: Iterable[ObservedObject],
                   radius: Optional[float] = None) -> List[str]:
    """Attach each object to the nearest area within radius; returns skipped names"""
    radius = get_settings().DEFAULT_AREA_RADIUS if radius is None else radius
    objects = list(objects)
    if not objects:
        return []
    if not graph.areas:
        return [o.name for o in objects]

    area_names = list(graph.areas)
    tree = cKDTree(np.array([graph.areas[n].position for n in area_names]))
    distances, indexes = tree.query(
        np.array([o.position for o in objects]), k=1, distance_upper_bound=radius
    )

    skipped = []
    for observed, distance, index in zip(objects, distances, indexes):
        if not np.isfinite(distance):
            skipped.append(observed.name)
            continue
        graph.add_object(area_names[int(index)], observed.name, observed.position, observed.volume)

    if skipped:
        logger.warning(f"{len(skipped)} objects outside every area radius ({radius} m): {skipped}")
    return skipped


# -- validation -------------------------------------------------------------------

def check_graph(graph: SceneGraph) -> List[str]:
    """Integrity problems of an in-memory graph (empty when valid)"""
    problems = []
    for area in graph.areas.values():
        if area.floor not in graph.floors:
            problems.append(f"area {area.name} has missing floor {area.floor}")
        for object_name in area.contains:
            node = graph.objects.get(object_name)
            if node is None or node.area != area.name:
                problems.append(f"area {area.name} lists {object_name} which does not belong to it")
    for node in graph.objects.values():
        if node.area not in graph.areas:
            problems.append(f"object {node.name} has missing area {node.area}")
    for a, b in graph.edges:
        if a == b:
            problems.append(f"self-loop on {a}")
        for name in (a, b):
            if name not in graph.areas:
                problems.append(f"edge {a} ↔ {b} references missing area {name}")
    names = list(graph.floors) + list(graph.areas) + list(graph.objects)
    if len(names) != len(set(names)):
        problems.append("node names are not unique across levels")
    return problems


# -- persistence ------------------------------------------------------------------

def _format_exact(position: Position) -> str:
    return "[" + ", ".join(repr(float(v)) for v in position) + "]"


def dumps(graph: SceneGraph) -> str:
    lines = [FILE_HEADER]
    lines += [f"floor {f.name}" for f in graph.floors.values()]
    lines += [f"area {a.name} floor={a.floor} position={_format_exact(a.position)}" for a in graph.areas.values()]
    for o in graph.objects.values():
        volume = "none" if o.volume is None else repr(float(o.volume))
        lines.append(f"object {o.name} area={o.area} position={_format_exact(o.position)} volume={volume}")
    lines += [f"edge {a} {b}" for a, b in graph.edges]
    lines.append(f"end {len(lines) - 1}")
    return "\n".join(lines) + "\n"


def save(graph: SceneGraph, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(graph), encoding="utf-8")
    logger.info(f"Saved scene graph ({len(graph)} nodes, {len(graph.edges)} edges) to {path}")


def _parse_position(raw: str, line_no: int) -> Position:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 3:
        raise SerializationError(f"position needs 3 coordinates, got {len(parts)}", location=f"line {line_no}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as e:
        raise SerializationError(f"non-numeric coordinate in [{raw}]", location=f"line {line_no}") from e


def loads(text: str, strict: bool = True) -> Tuple[SceneGraph, List[str]]:
    """Parse a save file. Non-strict mode collects integrity problems instead of raising."""
    graph = SceneGraph()
    problems: List[str] = []
    lines = text.splitlines()

    if not lines or lines[0].strip() != FILE_HEADER:
        raise SerializationError("missing or unknown header", location="line 1")

    records = 0
    ended = False
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ended:
            raise SerializationError("content after end marker", location=f"line {line_no}")

        try:
            if m := _FLOOR_LINE.match(line):
                graph.add_floor(m.group(1))
            elif m := _AREA_LINE.match(line):
                graph.add_area(m.group(1), _parse_position(m.group(3), line_no), floor=m.group(2))
            elif m := _OBJECT_LINE.match(line):
                volume = None if m.group(4) == "none" else _parse_volume(m.group(4), line_no)
                graph.add_object(m.group(2), m.group(1), _parse_position(m.group(3), line_no), volume)
            elif m := _EDGE_LINE.match(line):
                graph.add_edge(m.group(1), m.group(2))
            elif m := _END_LINE.match(line):
                if int(m.group(1)) != records:
                    raise SerializationError(
                        f"end marker counts {m.group(1)} records, file has {records}", location=f"line {line_no}"
                    )
                ended = True
                continue
            else:
                raise SerializationError(f"unrecognized line {line!r}", location=f"line {line_no}")
        except SceneGraphError as e:
            if strict:
                raise SerializationError(str(e), location=f"line {line_no}") from e
            problems.append(f"line {line_no}: {e}")
        records += 1

    if not ended:
        raise SerializationError("missing end marker (file truncated?)", location=f"line {len(lines)}")
    return graph, problems


def load(path: Union[str, Path]) -> SceneGraph:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"scene graph file not found: {path}")
    graph, _ = loads(path.read_text(encoding="utf-8"), strict=True)
    logger.info(f"Loaded scene graph ({len(graph)} nodes, {len(graph.edges)} edges) from {path}")
    return graph


def _parse_volume(raw: str, line_no: int) -> float:
    try:
        return float(raw)
    except ValueError as e:
        raise SerializationError(f"non-numeric volume {raw!r}", location=f"line {line_no}") from e
