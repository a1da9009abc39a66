"""
app/services/short_term_memory.py

The volatile per-session store of recently used or witnessed objects. Units
are admitted and evicted by a replacement policy and recalled by cosine
distance between the query and each unit's text rendering.

A new store is always empty; persisted documents are only read back through
ShortTermStore.deserialize.
"""

import json
from typing import Any, Dict, List, Mapping, Optional, Union

import numpy as np

from app.models.memory_schemas import MemoryUnit, ObjectState, RecallResult
from app.models.policy_schemas import EvictionReport, PolicyVariant, ResidentEntry, Segment, SegmentConfig
from app.services.cache_policies import ReplacementPolicy, WTinyLFUPolicy, create_policy
from app.services.embedding_service import Embedder, default_local_embedder
from app.utils.exceptions import SerializationError
from app.utils.logger import get_logger

logger = get_logger(__name__)

DOCUMENT_VERSION = 1
LISTING_PREFIX = "short_term_memory="

RECORD_FIELDS = ("objectType", "position", "objectId", "imagePath", "extensions")
REQUIRED_RECORD_FIELDS = ("objectType", "position", "objectId", "imagePath")
EXTENSION_FIELDS = ("state", "segment", "embedding")
DOCUMENT_FIELDS = ("version", "policy", "short_term_memory")


class ShortTermStore:
    """Memory units keyed by object id, governed by a replacement policy"""

    def __init__(self, policy: ReplacementPolicy, embedder: Optional[Embedder] = None):
        self.policy = policy
        self.embedder = embedder or default_local_embedder()
        self.units: Dict[str, MemoryUnit] = {}

    def __len__(self) -> int:
        return len(self.units)

    def __contains__(self, object_id: str) -> bool:
        return object_id in self.units

    def _embedded(self, unit: MemoryUnit) -> MemoryUnit:
        if unit.embedding is not None and unit.embedding.shape[0] == self.embedder.dimension:
            return unit
        return unit.model_copy(update={"embedding": self.embedder.embed(unit.text_rendering)})

    def record(self, unit: Union[MemoryUnit, Mapping[str, Any]]) -> EvictionReport:
        """Admit a unit; a merge overwrites the resident unit for the same object"""
        if not isinstance(unit, MemoryUnit):
            unit = MemoryUnit.model_validate(unit)
        unit = self._embedded(unit)

        key = unit.object_id
        already_resident = key in self.units
        report = self.policy.insert(key)

        if report.evicted is not None:
            self.units.pop(report.evicted, None)
            logger.debug(f"Evicted {report.evicted} to admit {key}")

        # plain FIFO keeps the first payload for a resident key
        if not already_resident or self.policy.variant is not PolicyVariant.FIFO:
            self.units[key] = unit

        return report

    def lookup(self, object_id: str) -> Optional[MemoryUnit]:
        """One policy query for a specific object; returns the unit on a hit"""
        self.policy.access(object_id)
        return self.units.get(object_id)

    def recall(self, query_text: str, k: int, count_queries: bool = True,
               query_vector: Optional[np.ndarray] = None) -> List[RecallResult]:
        """Top-k units by ascending cosine distance to the query.

        Each returned unit counts as a policy query (a hit); an empty store
        counts one miss.

        Args:
            query_text: Instruction or unit text, embedded with the store's embedder
            k: Number of units to return (fewer when the store holds fewer)
            count_queries: False leaves hit and query counters untouched
            query_vector: Precomputed unit-norm embedding; skips embedding query_text

        Returns:
            RecallResult list, nearest first; equal distances keep insertion order

        Raises:
            ValueError: If k < 1
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if not self.units:
            if count_queries:
                self.policy.count_miss()
            return []

        if query_vector is None:
            query_vector = self.embedder.embed(query_text)
        units = list(self.units.values())
        matrix = np.vstack([u.embedding for u in units])
        distances = np.clip(1.0 - matrix @ query_vector, 0.0, 2.0)
        order = np.argsort(distances, kind="stable")[:k]

        results = []
        for index in order:
            unit = units[int(index)]
            if count_queries:
                self.policy.access(unit.object_id)
            results.append(RecallResult(unit=unit, distance=float(distances[index])))
        return results

    def resident_units(self) -> List[MemoryUnit]:
        """Units in policy-resident order"""
        return [self.units[entry.key] for entry in self.policy.resident_keys()]

    # -- persistence ----------------------------------------------------------

    def serialize(self) -> str:
        policy_doc: Dict[str, Any] = {
            "variant": self.policy.variant.value,
            "capacity": self.policy.capacity,
            "window": None,
            "main": None,
        }
        if isinstance(self.policy, WTinyLFUPolicy):
            policy_doc["window"] = self.policy.window_capacity
            policy_doc["main"] = self.policy.main_capacity

        records = []
        for entry in self.policy.resident_keys():
            unit = self.units[entry.key]
            x, y, z = unit.position
            records.append({
                "objectType": unit.object_type,
                "position": {"x": x, "y": y, "z": z},
                "objectId": unit.object_id,
                "imagePath": unit.image_path,
                "extensions": {
                    "state": unit.state.value,
                    "segment": entry.segment.value,
                    "embedding": {
                        "model": self.embedder.model_name,
                        "dimension": self.embedder.dimension,
                    },
                },
            })

        document = {"version": DOCUMENT_VERSION, "policy": policy_doc, "short_term_memory": records}
        return json.dumps(document, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def deserialize(
        cls,
        text: str,
        embedder: Optional[Embedder] = None,
        policy: Optional[ReplacementPolicy] = None
    ) -> "ShortTermStore":
        """Load a serialized store, or a bare array of records (optionally prefixed with short_term_memory=)"""
        embedder = embedder or default_local_embedder()
        body = text.strip()
        if body.startswith(LISTING_PREFIX):
            body = body[len(LISTING_PREFIX):]

        try:
            document = json.loads(body)
        except json.JSONDecodeError as e:
            raise SerializationError(e.msg, location=f"line {e.lineno} column {e.colno}") from e

        if isinstance(document, list):
            records = document
            policy_doc = None
        elif isinstance(document, dict):
            unknown = [k for k in document if k not in DOCUMENT_FIELDS]
            if unknown:
                raise SerializationError(f"unknown field(s) {unknown}", location="document")
            if document.get("version") != DOCUMENT_VERSION:
                raise SerializationError(f"unsupported version {document.get('version')!r}", location="document")
            records = document.get("short_term_memory")
            policy_doc = document.get("policy")
            if not isinstance(records, list):
                raise SerializationError("short_term_memory must be a list", location="document")
        else:
            raise SerializationError("expected a JSON object or array", location="document")

        units = []
        entries = []
        for index, record in enumerate(records):
            unit, segment = _parse_record(record, index, embedder)
            units.append(unit)
            entries.append(ResidentEntry(key=unit.object_id, segment=segment))

        if policy is None:
            policy = _policy_from_document(policy_doc, len(units))

        store = cls(policy, embedder=embedder)
        seen = set()
        for unit in units:
            if unit.object_id in seen:
                raise SerializationError(f"duplicate objectId {unit.object_id!r}", location="document")
            seen.add(unit.object_id)
        if policy.variant is not PolicyVariant.W_TINYLFU:
            entries = [ResidentEntry(key=e.key, segment=Segment.QUEUE) for e in entries]
        policy.restore(entries)
        store.units = {unit.object_id: unit for unit in units}

        logger.info(f"Loaded short-term store with {len(store)} units ({policy.variant.value})")
        return store


def _record_location(index: int, record: Any) -> str:
    if isinstance(record, dict) and isinstance(record.get("objectId"), str):
        return f"record {index} ({record['objectId']})"
    return f"record {index}"


def _parse_record(record: Any, index: int, embedder: Embedder):
    location = _record_location(index, record)
    if not isinstance(record, dict):
        raise SerializationError("record must be an object", location=location)

    unknown = [k for k in record if k not in RECORD_FIELDS]
    if unknown:
        raise SerializationError(f"unknown field(s) {unknown}", location=location)
    missing = [k for k in REQUIRED_RECORD_FIELDS if k not in record]
    if missing:
        raise SerializationError(f"missing field(s) {missing}", location=location)

    position = record["position"]
    if not isinstance(position, dict) or sorted(position) != ["x", "y", "z"]:
        raise SerializationError("position must have exactly x, y, z", location=location)
    coordinates = []
    for axis in ("x", "y", "z"):
        value = position[axis]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SerializationError(f"non-numeric coordinate {axis}={value!r}", location=location)
        coordinates.append(float(value))

    for name in ("objectType", "objectId", "imagePath"):
        if not isinstance(record[name], str):
            raise SerializationError(f"{name} must be a string", location=location)

    extensions = record.get("extensions") or {}
    if not isinstance(extensions, dict):
        raise SerializationError("extensions must be an object", location=location)
    unknown = [k for k in extensions if k not in EXTENSION_FIELDS]
    if unknown:
        raise SerializationError(f"unknown extension field(s) {unknown}", location=location)

    try:
        state = ObjectState(extensions.get("state", ObjectState.NONE.value))
        segment = Segment(extensions.get("segment", Segment.QUEUE.value))
    except ValueError as e:
        raise SerializationError(str(e), location=location) from e

    embedding_meta = extensions.get("embedding")
    if embedding_meta is not None:
        if not isinstance(embedding_meta, dict):
            raise SerializationError("embedding must be an object", location=location)
        if (embedding_meta.get("model") != embedder.model_name
                or embedding_meta.get("dimension") != embedder.dimension):
            raise SerializationError(
                f"embedding {embedding_meta} does not match embedder "
                f"{embedder.model_name}/{embedder.dimension}",
                location=location
            )

    try:
        unit = MemoryUnit(
            object_type=record["objectType"],
            object_id=record["objectId"],
            position=tuple(coordinates),
            state=state,
            image_path=record["imagePath"],
        )
    except ValueError as e:
        raise SerializationError(str(e), location=location) from e

    unit = unit.model_copy(update={"embedding": embedder.embed(unit.text_rendering)})
    return unit, segment


def _policy_from_document(policy_doc: Optional[Dict[str, Any]], unit_count: int) -> ReplacementPolicy:
    if policy_doc is None:
        return create_policy(PolicyVariant.FIFO_MERGE, max(10, unit_count))
    try:
        variant = PolicyVariant(policy_doc["variant"])
        capacity = int(policy_doc["capacity"])
        segments = None
        if variant is PolicyVariant.W_TINYLFU:
            segments = SegmentConfig(window=int(policy_doc["window"]), main=int(policy_doc["main"]))
        return create_policy(variant, capacity, segment_config=segments)
    except (KeyError, TypeError, ValueError) as e:
        raise SerializationError(f"invalid policy block: {e}", location="policy") from e
