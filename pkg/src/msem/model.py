"""Layered temporal graph store for service-ecosystem models.

The model separates a *structural part* (entities of three layers plus
time-invariant semantic edges) from an *evolutionary part* (events and the
time-stamped relations they trigger).  Entities live in one of three layers
derived from their kind; events form a fourth layer of their own.  All
mutation goes through a single writer lock so snapshot reads are consistent.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from enum import Enum
from typing import Iterable, Iterator, Optional


class ModelError(Exception):
    """Base class for model violations."""


class LayerTypingError(ModelError):
    """Edge endpoints do not satisfy the layer rules for the edge kind."""


class InclusionCycleError(ModelError):
    """Adding the edge would close a directed Inclusion cycle."""


class TemporalOrderError(ModelError):
    """Sequential edge would point backwards in time (or at itself)."""


class UnknownNodeError(ModelError):
    """Referenced entity or event id is not in the model."""


class TimestampMismatchError(ModelError):
    """Evolutionary relation timestamp disagrees with its provenance event."""


class ModelFormatError(ModelError):
    """Export file is malformed or has an unsupported version."""


class EntityKind(str, Enum):
    ORGANIZATION = "Organization"
    CHANNEL = "Channel"
    EXECUTIVE = "Executive"
    SERVICE = "Service"
    FUNCTIONAL_FEATURE = "FunctionalFeature"
    NONFUNCTIONAL_FEATURE = "NonfunctionalFeature"
    DOMAIN = "Domain"


class Layer(str, Enum):
    STAKEHOLDER = "stakeholder"
    SERVICE_FEATURE = "service_feature"
    DOMAIN = "domain"
    EVENT = "event"


_LAYER_OF_KIND = {
    EntityKind.ORGANIZATION: Layer.STAKEHOLDER,
    EntityKind.CHANNEL: Layer.STAKEHOLDER,
    EntityKind.EXECUTIVE: Layer.STAKEHOLDER,
    EntityKind.SERVICE: Layer.SERVICE_FEATURE,
    EntityKind.FUNCTIONAL_FEATURE: Layer.SERVICE_FEATURE,
    EntityKind.NONFUNCTIONAL_FEATURE: Layer.SERVICE_FEATURE,
    EntityKind.DOMAIN: Layer.DOMAIN,
}


def layer_of(kind: EntityKind) -> Layer:
    return _LAYER_OF_KIND[kind]


class StructuralKind(str, Enum):
    EQUIVALENCE = "Equivalence"
    INCLUSION = "Inclusion"
    OVERLAP = "Overlap"
    HAS_ACTOR = "HasActor"
    HAS_RECIPIENT = "HasRecipient"
    HAS_OBJECT = "HasObject"
    BELONG_TO = "BelongTo"
    SEQUENTIAL = "Sequential"


#: Same-layer semantic kinds, restricted to the two non-stakeholder layers.
SEMANTIC_KINDS = frozenset(
    {StructuralKind.EQUIVALENCE, StructuralKind.INCLUSION, StructuralKind.OVERLAP}
)


def to_utc(value: datetime | date | str) -> datetime:
    """Normalize a timestamp-ish value to a timezone-aware UTC datetime.

    Dates become midnight UTC; naive datetimes are assumed UTC.  Accepts
    ISO-8601 strings (with a trailing ``Z`` tolerated).
    """
    if isinstance(value, str):
        text = value.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        try:
            value = datetime.fromisoformat(text)
        except ValueError:
            try:
                value = date.fromisoformat(text)
            except ValueError as exc:
                raise ModelError(f"unparseable timestamp: {value!r}") from exc
    if isinstance(value, datetime):
        if value.tzinfo is None:
            return value.replace(tzinfo=timezone.utc)
        return value.astimezone(timezone.utc)
    if isinstance(value, date):
        return datetime(value.year, value.month, value.day, tzinfo=timezone.utc)
    raise ModelError(f"unsupported timestamp type: {type(value).__name__}")


def same_utc_date(a: datetime, b: datetime) -> bool:
    """Compare two timestamps at the model's day resolution."""
    return to_utc(a).date() == to_utc(b).date()


def _norm_text(text: Optional[str]) -> str:
    return " ".join(text.split()).casefold() if text else ""


@dataclass
class Entity:
    id: str
    kind: EntityKind
    canonical_name: str
    aliases: set[str] = field(default_factory=set)
    attributes: dict[str, str] = field(default_factory=dict)

    @property
    def layer(self) -> Layer:
        return layer_of(self.kind)


@dataclass
class ComponentRef:
    """A surface mention of an event component plus its linked entity, if any."""

    text: str
    entity_id: Optional[str] = None


@dataclass
class Event:
    """Sextuple extracted from one news title sentence.

    ``action`` and ``time`` are mandatory; the remaining components may be
    absent.  ``time`` falls back to the source document's publication date
    when the text carries no time expression, so it is always populated.
    """

    action: str
    time: datetime
    source_doc_id: str
    actor: Optional[ComponentRef] = None
    recipient: Optional[ComponentRef] = None
    object: Optional[ComponentRef] = None
    attribute: Optional[str] = None
    title: Optional[str] = None
    id: Optional[str] = None

    def components(self) -> dict[str, Optional[ComponentRef]]:
        return {"actor": self.actor, "recipient": self.recipient, "object": self.object}

    def dedupe_key(self) -> tuple:
        return (
            self.source_doc_id,
            _norm_text(self.action),
            _norm_text(self.actor.text if self.actor else None),
            _norm_text(self.recipient.text if self.recipient else None),
            _norm_text(self.object.text if self.object else None),
            _norm_text(self.attribute),
        )


@dataclass(frozen=True)
class StructuralRelation:
    id: str
    src: str
    dst: str
    kind: StructuralKind


@dataclass(frozen=True)
class EvolutionaryRelation:
    """Quintuple (source, destination, relation, timestamp, attributes).

    ``event_id`` records provenance; the timestamp always equals the
    provenance event's time at day resolution.
    """

    id: str
    source: str
    destination: str
    relation: str
    timestamp: datetime
    attributes: tuple[tuple[str, str], ...]
    event_id: str

    def attributes_dict(self) -> dict[str, str]:
        return dict(self.attributes)


@dataclass(frozen=True)
class ModelSnapshot:
    """Point-in-time view: full structural part, evolutionary edges up to ``at``."""

    at: datetime
    entities: tuple[Entity, ...]
    structural: tuple[StructuralRelation, ...]
    evolutionary: tuple[EvolutionaryRelation, ...]


_EXPORT_VERSION = 1


class EcosystemModel:
    """Mutable store for the four-layer model.

    Single-writer / multi-reader: every mutator takes the writer lock, and
    read operations copy references under the same lock so they observe a
    consistent state.
    """

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._entities: dict[str, Entity] = {}
        self._entity_key: dict[tuple[EntityKind, str], str] = {}
        self._events: dict[str, Event] = {}
        self._event_key: dict[tuple, str] = {}
        self._structural: dict[str, StructuralRelation] = {}
        self._structural_key: dict[tuple[str, str, StructuralKind], str] = {}
        self._evolutionary: dict[str, EvolutionaryRelation] = {}
        self._evolution_key: dict[tuple, str] = {}
        self._counters = {"entity": 0, "event": 0, "structural": 0, "evolutionary": 0}

    # -- id allocation -------------------------------------------------

    def _next_id(self, space: str, prefix: str) -> str:
        self._counters[space] += 1
        return f"{prefix}{self._counters[space]}"

    # -- entities ------------------------------------------------------

    def upsert_entity(
        self,
        kind: EntityKind | str,
        canonical_name: str,
        aliases: Iterable[str] = (),
        attributes: Optional[dict[str, str]] = None,
    ) -> str:
        """Create or merge an entity keyed by (kind, canonical name).

        Re-upserting merges aliases and attributes into the existing record
        and returns the same id, so ingestion is idempotent.
        """
        kind = EntityKind(kind)
        name = canonical_name.strip()
        if not name:
            raise ModelError("entity canonical name must be non-empty")
        with self._lock:
            key = (kind, name)
            existing = self._entity_key.get(key)
            if existing is not None:
                ent = self._entities[existing]
                ent.aliases.update(a.strip() for a in aliases if a.strip())
                if attributes:
                    ent.attributes.update(attributes)
                return existing
            eid = self._next_id("entity", "n")
            self._entities[eid] = Entity(
                id=eid,
                kind=kind,
                canonical_name=name,
                aliases={a.strip() for a in aliases if a.strip()},
                attributes=dict(attributes or {}),
            )
            self._entity_key[key] = eid
            return eid

    def entity(self, entity_id: str) -> Entity:
        try:
            return self._entities[entity_id]
        except KeyError:
            raise UnknownNodeError(f"unknown entity {entity_id!r}") from None

    def find_entity(self, kind: EntityKind | str, canonical_name: str) -> Optional[str]:
        return self._entity_key.get((EntityKind(kind), canonical_name.strip()))

    def find_entity_by_name(self, canonical_name: str) -> list[str]:
        """All entity ids with this canonical name, across kinds, insertion order."""
        name = canonical_name.strip()
        return [e.id for e in self._entities.values() if e.canonical_name == name]

    def entities(self, kind: Optional[EntityKind] = None) -> Iterator[Entity]:
        for ent in list(self._entities.values()):
            if kind is None or ent.kind == kind:
                yield ent

    # -- events --------------------------------------------------------

    def record_event(self, event: Event) -> str:
        """Store an event, replay-safe on (source doc, component texts)."""
        if not event.action or not event.action.strip():
            raise ModelError("event action must be non-empty")
        if event.time is None:
            raise ModelError("event time must be populated (no fallback available)")
        event.time = to_utc(event.time)
        with self._lock:
            key = event.dedupe_key()
            existing = self._event_key.get(key)
            if existing is not None:
                return existing
            evid = self._next_id("event", "e")
            event.id = evid
            self._events[evid] = event
            self._event_key[key] = evid
            return evid

    def event(self, event_id: str) -> Event:
        try:
            return self._events[event_id]
        except KeyError:
            raise UnknownNodeError(f"unknown event {event_id!r}") from None

    def events(self) -> Iterator[Event]:
        yield from list(self._events.values())

    # -- structural relations ------------------------------------------

    def _endpoint_kind(self, node_id: str) -> Optional[EntityKind]:
        """Entity kind for an endpoint, or None when it is an event id."""
        if node_id in self._entities:
            return self._entities[node_id].kind
        if node_id in self._events:
            return None
        raise UnknownNodeError(f"unknown node {node_id!r}")

    def _check_edge_typing(self, src: str, dst: str, kind: StructuralKind) -> None:
        src_kind = self._endpoint_kind(src)
        dst_kind = self._endpoint_kind(dst)
        src_is_event = src_kind is None
        dst_is_event = dst_kind is None

        if kind in SEMANTIC_KINDS:
            if src_is_event or dst_is_event:
                raise LayerTypingError(f"{kind.value} cannot touch events")
            if layer_of(src_kind) != layer_of(dst_kind):
                raise LayerTypingError(
                    f"{kind.value} requires same-layer endpoints, got "
                    f"{src_kind.value} / {dst_kind.value}"
                )
            if layer_of(src_kind) not in (Layer.SERVICE_FEATURE, Layer.DOMAIN):
                raise LayerTypingError(
                    f"{kind.value} only links service&feature or domain entities"
                )
        elif kind in (StructuralKind.HAS_ACTOR, StructuralKind.HAS_RECIPIENT):
            if not src_is_event or dst_is_event or layer_of(dst_kind) != Layer.STAKEHOLDER:
                raise LayerTypingError(f"{kind.value} must link event -> stakeholder")
        elif kind is StructuralKind.HAS_OBJECT:
            if not src_is_event or dst_is_event or layer_of(dst_kind) != Layer.SERVICE_FEATURE:
                raise LayerTypingError("HasObject must link event -> service&feature entity")
        elif kind is StructuralKind.BELONG_TO:
            if src_is_event or dst_is_event:
                raise LayerTypingError("BelongTo cannot touch events")
            if dst_kind != EntityKind.DOMAIN or layer_of(src_kind) not in (
                Layer.STAKEHOLDER,
                Layer.SERVICE_FEATURE,
            ):
                raise LayerTypingError(
                    "BelongTo must link stakeholder/service&feature entity -> Domain"
                )
        elif kind is StructuralKind.SEQUENTIAL:
            if not src_is_event or not dst_is_event:
                raise LayerTypingError("Sequential must link event -> event")
            if src == dst:
                raise TemporalOrderError("Sequential self-loop rejected")
            earlier, later = self._events[src], self._events[dst]
            if earlier.time is not None and later.time is not None:
                if earlier.time > later.time:
                    raise TemporalOrderError(
                        f"Sequential edge {src}->{dst} runs backwards in time"
                    )
        else:  # pragma: no cover - enum is exhaustive
            raise ModelError(f"unknown structural kind {kind!r}")

    def _would_cycle(self, src: str, dst: str) -> bool:
        """True if Inclusion(src -> dst) closes a directed cycle."""
        stack, seen = [dst], set()
        while stack:
            node = stack.pop()
            if node == src:
                return True
            if node in seen:
                continue
            seen.add(node)
            for rel in self._structural.values():
                if rel.kind is StructuralKind.INCLUSION and rel.src == node:
                    stack.append(rel.dst)
        return False

    def add_structural(self, src: str, dst: str, kind: StructuralKind | str) -> str:
        kind = StructuralKind(kind)
        with self._lock:
            self._check_edge_typing(src, dst, kind)
            existing = self.find_structural(src, dst, kind)
            if existing is not None:
                return existing.id
            if kind is StructuralKind.INCLUSION and self._would_cycle(src, dst):
                raise InclusionCycleError(
                    f"Inclusion {src}->{dst} would close a directed cycle"
                )
            sid = self._next_id("structural", "s")
            rel = StructuralRelation(id=sid, src=src, dst=dst, kind=kind)
            self._structural[sid] = rel
            self._structural_key[(src, dst, kind)] = sid
            return sid

    def add_sequential(self, earlier_event_id: str, later_event_id: str) -> str:
        """Directed event-order edge; rejects self-loops and time reversal."""
        return self.add_structural(earlier_event_id, later_event_id, StructuralKind.SEQUENTIAL)

    def find_structural(
        self, src: str, dst: str, kind: StructuralKind | str
    ) -> Optional[StructuralRelation]:
        """Edge lookup; Equivalence matches in either direction."""
        kind = StructuralKind(kind)
        sid = self._structural_key.get((src, dst, kind))
        if sid is None and kind is StructuralKind.EQUIVALENCE:
            sid = self._structural_key.get((dst, src, kind))
        return self._structural[sid] if sid is not None else None

    def structural(self, kind: Optional[StructuralKind] = None) -> Iterator[StructuralRelation]:
        for rel in list(self._structural.values()):
            if kind is None or rel.kind == kind:
                yield rel

    # -- evolutionary relations ----------------------------------------

    def apply_evolution(
        self,
        source: str,
        destination: str,
        relation: str,
        timestamp: datetime | date | str,
        attributes: Optional[dict[str, str]] = None,
        event_id: str = "",
    ) -> str:
        """Append one evolutionary quintuple derived from a provenance event.

        Exact duplicates (full quintuple + provenance) collapse to the first
        edge, keeping rule application idempotent; parallel edges between the
        same pair with different provenance are all retained.
        """
        with self._lock:
            self.entity(source)
            self.entity(destination)
            event = self.event(event_id)
            ts = to_utc(timestamp)
            if not same_utc_date(ts, event.time):
                raise TimestampMismatchError(
                    f"evolutionary timestamp {ts.date()} != provenance event "
                    f"time {event.time.date()}"
                )
            attrs = tuple(sorted((attributes or {}).items()))
            key = (source, destination, relation, ts, attrs, event_id)
            existing = self._evolution_key.get(key)
            if existing is not None:
                return existing
            rid = self._next_id("evolutionary", "r")
            self._evolutionary[rid] = EvolutionaryRelation(
                id=rid,
                source=source,
                destination=destination,
                relation=relation,
                timestamp=ts,
                attributes=attrs,
                event_id=event_id,
            )
            self._evolution_key[key] = rid
            return rid

    def evolutionary(self) -> Iterator[EvolutionaryRelation]:
        yield from list(self._evolutionary.values())

    # -- snapshots -----------------------------------------------------

    def snapshot_at(self, at: datetime | date | str) -> ModelSnapshot:
        ts = to_utc(at)
        with self._lock:
            return ModelSnapshot(
                at=ts,
                entities=tuple(self._entities.values()),
                structural=tuple(self._structural.values()),
                evolutionary=tuple(
                    rel for rel in self._evolutionary.values() if rel.timestamp <= ts
                ),
            )

    # -- counts --------------------------------------------------------

    def counts(self) -> dict[str, int]:
        with self._lock:
            return {
                "entities": len(self._entities),
                "events": len(self._events),
                "structural": len(self._structural),
                "evolutionary": len(self._evolutionary),
            }

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        def ref(c: Optional[ComponentRef]) -> Optional[dict]:
            if c is None:
                return None
            return {"text": c.text, "entity": c.entity_id}

        with self._lock:
            return {
                "version": _EXPORT_VERSION,
                "entities": [
                    {
                        "id": e.id,
                        "kind": e.kind.value,
                        "name": e.canonical_name,
                        "aliases": sorted(e.aliases),
                        "attributes": dict(sorted(e.attributes.items())),
                    }
                    for e in self._entities.values()
                ],
                "events": [
                    {
                        "id": ev.id,
                        "actor": ref(ev.actor),
                        "action": ev.action,
                        "recipient": ref(ev.recipient),
                        "object": ref(ev.object),
                        "attribute": ev.attribute,
                        "time": ev.time.isoformat(),
                        "doc": ev.source_doc_id,
                        "title": ev.title,
                    }
                    for ev in self._events.values()
                ],
                "structural": [
                    {"id": s.id, "src": s.src, "dst": s.dst, "kind": s.kind.value}
                    for s in self._structural.values()
                ],
                "evolutionary": [
                    {
                        "id": r.id,
                        "src": r.source,
                        "dst": r.destination,
                        "rel": r.relation,
                        "ts": r.timestamp.isoformat(),
                        "attrs": dict(r.attributes),
                        "event": r.event_id,
                    }
                    for r in self._evolutionary.values()
                ],
            }

    def export_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")

    @classmethod
    def from_dict(cls, payload: dict) -> "EcosystemModel":
        if not isinstance(payload, dict) or payload.get("version") != _EXPORT_VERSION:
            raise ModelFormatError(
                f"unsupported model version {payload.get('version')!r}"
                if isinstance(payload, dict)
                else "model file must hold a JSON object"
            )
        model = cls()

        def unref(obj: Optional[dict]) -> Optional[ComponentRef]:
            if obj is None:
                return None
            return ComponentRef(text=obj["text"], entity_id=obj.get("entity"))

        try:
            for e in payload["entities"]:
                ent = Entity(
                    id=e["id"],
                    kind=EntityKind(e["kind"]),
                    canonical_name=e["name"],
                    aliases=set(e.get("aliases", ())),
                    attributes=dict(e.get("attributes", {})),
                )
                model._entities[ent.id] = ent
                model._entity_key[(ent.kind, ent.canonical_name)] = ent.id
            for v in payload["events"]:
                event = Event(
                    id=v["id"],
                    action=v["action"],
                    time=to_utc(v["time"]),
                    source_doc_id=v["doc"],
                    actor=unref(v.get("actor")),
                    recipient=unref(v.get("recipient")),
                    object=unref(v.get("object")),
                    attribute=v.get("attribute"),
                    title=v.get("title"),
                )
                model._events[event.id] = event
                model._event_key[event.dedupe_key()] = event.id
            for s in payload["structural"]:
                rel = StructuralRelation(
                    id=s["id"], src=s["src"], dst=s["dst"], kind=StructuralKind(s["kind"])
                )
                model._structural[rel.id] = rel
                model._structural_key[(rel.src, rel.dst, rel.kind)] = rel.id
            for r in payload["evolutionary"]:
                evo = EvolutionaryRelation(
                    id=r["id"],
                    source=r["src"],
                    destination=r["dst"],
                    relation=r["rel"],
                    timestamp=to_utc(r["ts"]),
                    attributes=tuple(sorted(r.get("attrs", {}).items())),
                    event_id=r["event"],
                )
                model._evolutionary[evo.id] = evo
                key = (evo.source, evo.destination, evo.relation, evo.timestamp,
                       evo.attributes, evo.event_id)
                model._evolution_key[key] = evo.id
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed model payload: {exc}") from exc

        for space, prefix, table in (
            ("entity", "n", model._entities),
            ("event", "e", model._events),
            ("structural", "s", model._structural),
            ("evolutionary", "r", model._evolutionary),
        ):
            indices = [
                int(k[len(prefix):]) for k in table if k.startswith(prefix) and k[len(prefix):].isdigit()
            ]
            model._counters[space] = max(indices, default=0)
        return model

    @classmethod
    def import_json(cls, path: str) -> "EcosystemModel":
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(
                f"cannot parse model file at byte offset {exc.pos}: {exc.msg}"
            ) from exc
        return cls.from_dict(payload)
