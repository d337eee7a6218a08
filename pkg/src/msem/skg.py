"""Structural-part construction from triple sources and external records.

Generic knowledge-graph triples are filtered and typed by a rulebase of
regular expressions, mapped to layered entities and semantic edges, and then
enriched by external records that merge through an alias index.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO

from .model import EcosystemModel, EntityKind, LayerTypingError, ModelError, StructuralKind

DISCARD = "DISCARD"

#: Default mapping from triple predicates to semantic edge kinds.  Anything
#: not listed lands in the subject entity's attribute map instead.
DEFAULT_PREDICATE_MAP: dict[str, StructuralKind] = {
    "equivalent_to": StructuralKind.EQUIVALENCE,
    "includes": StructuralKind.INCLUSION,
    "subclass_of": StructuralKind.INCLUSION,
    "overlaps": StructuralKind.OVERLAP,
    "belongs_to": StructuralKind.BELONG_TO,
    "industry": StructuralKind.BELONG_TO,
}


@dataclass(frozen=True)
class RawTriple:
    subject: str
    predicate: str
    object: str
    source: str = ""


@dataclass
class ClassifierRule:
    """Regex over an entity name or its context predicates, plus a target kind."""

    pattern: str
    target: str  # EntityKind value or DISCARD
    priority: int
    _compiled: re.Pattern = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_compiled", re.compile(self.pattern))
        if self.target != DISCARD:
            EntityKind(self.target)  # raises on unknown kind

    def matches(self, name: str, predicates: Iterable[str]) -> bool:
        if self._compiled.search(name):
            return True
        return any(self._compiled.search(p) for p in predicates)


class Rulebase:
    """Ordered classifier rules; lowest priority wins, priorities unique."""

    def __init__(self, rules: Iterable[ClassifierRule]):
        rules = sorted(rules, key=lambda r: r.priority)
        priorities = [r.priority for r in rules]
        if len(set(priorities)) != len(priorities):
            raise ModelError("classifier rule priorities must be unique")
        self.rules = rules

    def __len__(self) -> int:
        return len(self.rules)

    @classmethod
    def from_json(cls, path: str) -> "Rulebase":
        with open(path, "r", encoding="utf-8") as fh:
            items = json.load(fh)
        return cls(
            ClassifierRule(pattern=i["pattern"], target=i["target"], priority=i["priority"])
            for i in items
        )


def classify_entity(name: str, context_predicates: Iterable[str], rulebase: Rulebase) -> str:
    """First matching rule by ascending priority; no match means DISCARD.

    Pure: the result depends only on the arguments.
    """
    if not len(rulebase):
        raise ModelError("classifier rulebase must be non-empty")
    predicates = list(context_predicates)
    for rule in rulebase.rules:
        if rule.matches(name, predicates):
            return rule.target
    return DISCARD


@dataclass
class IngestReport:
    processed: int = 0
    skipped_malformed: int = 0
    entities_touched: int = 0
    edges_added: int = 0
    attributes_added: int = 0
    dropped_discard: int = 0
    dropped_edges: int = 0


def parse_triples_tsv(stream: TextIO, source: str = "tsv") -> Iterable[RawTriple | None]:
    """Yield triples from TSV lines; malformed lines yield None."""
    for line in stream:
        line = line.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3 or not all(p.strip() for p in parts):
            yield None
            continue
        yield RawTriple(parts[0].strip(), parts[1].strip(), parts[2].strip(), source)


def parse_triples_jsonl(stream: TextIO, source: str = "jsonl") -> Iterable[RawTriple | None]:
    for line in stream:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            s, p, o = obj["s"], obj["p"], obj["o"]
        except (json.JSONDecodeError, KeyError, TypeError):
            yield None
            continue
        if not all(isinstance(x, str) and x.strip() for x in (s, p, o)):
            yield None
            continue
        yield RawTriple(s.strip(), p.strip(), o.strip(), source)


def ingest_triples(
    model: EcosystemModel,
    triples: Iterable[RawTriple | None],
    rulebase: Rulebase,
    predicate_map: Optional[dict[str, StructuralKind]] = None,
) -> IngestReport:
    """Classify and upsert triple endpoints, mapping known predicates to edges.

    Subjects that classify DISCARD drop the whole triple.  Predicates outside
    the relation vocabulary are preserved as subject attributes.  Malformed
    entries (None) are counted and skipped; the stream is never aborted.
    Upserts happen in input order, so repeated ingestion is idempotent.
    """
    pmap = DEFAULT_PREDICATE_MAP if predicate_map is None else predicate_map
    report = IngestReport()
    for triple in triples:
        if triple is None:
            report.skipped_malformed += 1
            continue
        report.processed += 1
        subj_kind = classify_entity(triple.subject, [triple.predicate], rulebase)
        if subj_kind == DISCARD:
            report.dropped_discard += 1
            continue
        subj_id = model.upsert_entity(subj_kind, triple.subject)
        report.entities_touched += 1

        relation = pmap.get(triple.predicate)
        if relation is None:
            model.entity(subj_id).attributes.setdefault(triple.predicate, triple.object)
            report.attributes_added += 1
            continue

        obj_kind = classify_entity(triple.object, [triple.predicate], rulebase)
        if obj_kind == DISCARD:
            report.dropped_edges += 1
            continue
        obj_id = model.upsert_entity(obj_kind, triple.object)
        report.entities_touched += 1
        try:
            model.add_structural(subj_id, obj_id, relation)
            report.edges_added += 1
        except (LayerTypingError, ModelError):
            report.dropped_edges += 1
    return report


class AliasIndex:
    """Normalized surface form -> entity id, built from names and aliases."""

    def __init__(self) -> None:
        self._index: dict[str, str] = {}

    @staticmethod
    def normalize(surface: str) -> str:
        return " ".join(surface.split()).casefold()

    def add(self, surface: str, entity_id: str) -> None:
        key = self.normalize(surface)
        if key:
            self._index.setdefault(key, entity_id)

    def resolve(self, surface: str) -> Optional[str]:
        return self._index.get(self.normalize(surface))

    @classmethod
    def from_model(cls, model: EcosystemModel) -> "AliasIndex":
        index = cls()
        for ent in model.entities():
            index.add(ent.canonical_name, ent.id)
            for alias in sorted(ent.aliases):
                index.add(alias, ent.id)
        return index


@dataclass(frozen=True)
class ExternalRecord:
    kind: EntityKind
    name: str
    aliases: tuple[str, ...] = ()
    attributes: tuple[tuple[str, str], ...] = ()

    @classmethod
    def from_obj(cls, obj: dict) -> "ExternalRecord":
        return cls(
            kind=EntityKind(obj["kind"]),
            name=obj["name"],
            aliases=tuple(obj.get("aliases", ())),
            attributes=tuple(sorted(obj.get("attributes", {}).items())),
        )


@dataclass
class MergeReport:
    merged: int = 0
    created: int = 0
    conflicts: list[str] = field(default_factory=list)


def merge_external(
    model: EcosystemModel,
    records: Iterable[ExternalRecord],
    alias_index: Optional[AliasIndex] = None,
) -> MergeReport:
    """Fuse external records into the model through the alias index.

    A record whose name or alias resolves merges into that entity (provided
    the kinds agree); otherwise a fresh entity is created.  Names and aliases
    of every processed record are fed back into the index, which makes a
    second pass over the same records a no-op.
    """
    index = alias_index if alias_index is not None else AliasIndex.from_model(model)
    report = MergeReport()
    for record in records:
        target: Optional[str] = index.resolve(record.name)
        if target is None:
            for alias in record.aliases:
                target = index.resolve(alias)
                if target is not None:
                    break
        attrs = dict(record.attributes)
        if target is not None:
            existing = model.entity(target)
            if existing.kind != record.kind:
                report.conflicts.append(
                    f"record {record.name!r} ({record.kind.value}) collides with "
                    f"{existing.canonical_name!r} ({existing.kind.value})"
                )
                continue
            model.upsert_entity(
                existing.kind,
                existing.canonical_name,
                aliases=(record.name, *record.aliases),
                attributes=attrs,
            )
            report.merged += 1
        else:
            target = model.upsert_entity(
                record.kind, record.name, aliases=record.aliases, attributes=attrs
            )
            report.created += 1
        index.add(record.name, target)
        for alias in record.aliases:
            index.add(alias, target)
    return report


def read_external_jsonl(stream: TextIO) -> Iterable[ExternalRecord]:
    for line in stream:
        if line.strip():
            yield ExternalRecord.from_obj(json.loads(line))


@dataclass(frozen=True)
class SkgStats:
    """Per-kind node counts plus the structural link count (entity-entity only)."""

    organizations: int
    channels: int
    executives: int
    services: int
    functional_features: int
    nonfunctional_features: int
    domains: int
    links: int

    @property
    def nodes(self) -> int:
        return (
            self.organizations
            + self.channels
            + self.executives
            + self.services
            + self.functional_features
            + self.nonfunctional_features
            + self.domains
        )


def skg_stats(model: EcosystemModel) -> SkgStats:
    by_kind = {kind: 0 for kind in EntityKind}
    for ent in model.entities():
        by_kind[ent.kind] += 1
    entity_ids = {e.id for e in model.entities()}
    links = sum(
        1 for rel in model.structural() if rel.src in entity_ids and rel.dst in entity_ids
    )
    return SkgStats(
        organizations=by_kind[EntityKind.ORGANIZATION],
        channels=by_kind[EntityKind.CHANNEL],
        executives=by_kind[EntityKind.EXECUTIVE],
        services=by_kind[EntityKind.SERVICE],
        functional_features=by_kind[EntityKind.FUNCTIONAL_FEATURE],
        nonfunctional_features=by_kind[EntityKind.NONFUNCTIONAL_FEATURE],
        domains=by_kind[EntityKind.DOMAIN],
        links=links,
    )
