"""Linking event-component mentions to structural-part entities.

Resolution runs a three-stage cascade: exact canonical-name match, alias
match, then an external knowledge-graph lookup; mentions that survive all
three become new entities with a role-derived default kind.  Each resolved
component gains the matching HasActor/HasRecipient/HasObject edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Protocol

from .model import EcosystemModel, Entity, EntityKind, Event, Layer, StructuralKind, layer_of
from .skg import AliasIndex


class FusionError(Exception):
    pass


class ExternalKgError(FusionError):
    """Transport-level failure of the external knowledge-graph client."""


class LinkOutcome(str, Enum):
    DIRECT_MATCH = "DirectMatch"
    ALIAS_MATCH = "AliasMatch"
    EXTERNAL_LOOKUP = "ExternalLookup"
    CREATED = "Created"


@dataclass(frozen=True)
class Mention:
    surface: str
    role: str  # Actor | Recipient | Object
    event_id: str

    def __post_init__(self) -> None:
        if not self.surface.strip():
            raise FusionError("mention surface must be non-empty")
        if self.role not in _ROLE_EDGE:
            raise FusionError(f"unknown component role {self.role!r}")


@dataclass
class LinkResult:
    outcome: LinkOutcome
    entity_id: str
    warning: Optional[str] = None


@dataclass(frozen=True)
class ExternalHit:
    canonical: str
    aliases: tuple[str, ...] = ()
    kind: Optional[EntityKind] = None


class ExternalKgClient(Protocol):
    """Lookup contract: None for a clean miss, ExternalKgError on failure."""

    def lookup(self, name: str) -> Optional[ExternalHit]: ...


class FileKgClient:
    """Exact-match client over a fixed JSONL dataset, for tests and fixtures.

    Each line holds ``{"kind","name","aliases":[]}``; lookups match the
    normalized name or any alias.
    """

    def __init__(self, records: Iterable[dict]):
        self._by_surface: dict[str, ExternalHit] = {}
        for obj in records:
            hit = ExternalHit(
                canonical=obj["name"],
                aliases=tuple(obj.get("aliases", ())),
                kind=EntityKind(obj["kind"]) if obj.get("kind") else None,
            )
            for surface in (hit.canonical, *hit.aliases):
                self._by_surface.setdefault(AliasIndex.normalize(surface), hit)

    @classmethod
    def from_jsonl(cls, path: str) -> "FileKgClient":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.loads(line) for line in fh if line.strip())

    def lookup(self, name: str) -> Optional[ExternalHit]:
        return self._by_surface.get(AliasIndex.normalize(name))


class HttpKgClient:
    """External KG over HTTP: GET ?entity=<name> returning
    ``{"found":bool,"canonical":...,"aliases":[...]}``."""

    def __init__(self, base_url: str, timeout: float = 5.0):
        self.base_url = base_url
        self.timeout = timeout

    def lookup(self, name: str) -> Optional[ExternalHit]:
        import httpx

        try:
            resp = httpx.get(self.base_url, params={"entity": name}, timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except httpx.HTTPError as exc:
            raise ExternalKgError(f"external KG lookup failed: {exc}") from exc
        if not payload.get("found"):
            return None
        kind = payload.get("kind")
        return ExternalHit(
            canonical=payload["canonical"],
            aliases=tuple(payload.get("aliases", ())),
            kind=EntityKind(kind) if kind else None,
        )


_ROLE_EDGE = {
    "Actor": StructuralKind.HAS_ACTOR,
    "Recipient": StructuralKind.HAS_RECIPIENT,
    "Object": StructuralKind.HAS_OBJECT,
}

_ROLE_LAYER = {
    "Actor": Layer.STAKEHOLDER,
    "Recipient": Layer.STAKEHOLDER,
    "Object": Layer.SERVICE_FEATURE,
}

DEFAULT_CREATED_KINDS = {
    "Actor": EntityKind.ORGANIZATION,
    "Recipient": EntityKind.ORGANIZATION,
    "Object": EntityKind.FUNCTIONAL_FEATURE,
}


@dataclass
class FusionReport:
    outcomes: dict[str, int] = field(default_factory=lambda: {o.value: 0 for o in LinkOutcome})
    edges_added: int = 0
    warnings: list[str] = field(default_factory=list)

    def count(self, result: LinkResult) -> None:
        self.outcomes[result.outcome.value] += 1
        if result.warning:
            self.warnings.append(result.warning)


class Fuser:
    """Holds the match indices and applies the cascade against one model."""

    def __init__(
        self,
        model: EcosystemModel,
        client: Optional[ExternalKgClient] = None,
        created_kinds: Optional[dict[str, EntityKind]] = None,
    ):
        self.model = model
        self.client = client
        self.created_kinds = dict(DEFAULT_CREATED_KINDS)
        if created_kinds:
            self.created_kinds.update(created_kinds)
        self._by_name: dict[str, list[str]] = {}
        self._by_alias: dict[str, list[str]] = {}
        for ent in model.entities():
            self._register(ent)

    def _register(self, ent: Entity) -> None:
        name_key = AliasIndex.normalize(ent.canonical_name)
        bucket = self._by_name.setdefault(name_key, [])
        if ent.id not in bucket:
            bucket.append(ent.id)
        for alias in ent.aliases:
            key = AliasIndex.normalize(alias)
            abucket = self._by_alias.setdefault(key, [])
            if ent.id not in abucket:
                abucket.append(ent.id)

    def _pick(self, candidates: list[str], role: str) -> Optional[str]:
        """Role-compatible candidate with the most aliases, then smallest id."""
        fitting = [
            eid
            for eid in candidates
            if layer_of(self.model.entity(eid).kind) == _ROLE_LAYER[role]
        ]
        if not fitting:
            return None
        return min(fitting, key=lambda eid: (-len(self.model.entity(eid).aliases), eid))

    def resolve_mention(self, mention: Mention) -> LinkResult:
        key = AliasIndex.normalize(mention.surface)
        direct = self._pick(self._by_name.get(key, []), mention.role)
        if direct is not None:
            return LinkResult(LinkOutcome.DIRECT_MATCH, direct)
        via_alias = self._pick(self._by_alias.get(key, []), mention.role)
        if via_alias is not None:
            return LinkResult(LinkOutcome.ALIAS_MATCH, via_alias)

        warning = None
        if self.client is not None:
            try:
                hit = self.client.lookup(mention.surface)
            except ExternalKgError as exc:
                hit = None
                warning = f"external lookup failed for {mention.surface!r}: {exc}"
            if hit is not None:
                kind = hit.kind or self.created_kinds[mention.role]
                if layer_of(kind) != _ROLE_LAYER[mention.role]:
                    kind = self.created_kinds[mention.role]
                eid = self.model.upsert_entity(
                    kind, hit.canonical, aliases=(*hit.aliases, mention.surface)
                )
                self._register(self.model.entity(eid))
                return LinkResult(LinkOutcome.EXTERNAL_LOOKUP, eid, warning)

        surface = " ".join(mention.surface.split())
        eid = self.model.upsert_entity(self.created_kinds[mention.role], surface)
        self._register(self.model.entity(eid))
        return LinkResult(LinkOutcome.CREATED, eid, warning)

    def fuse_event(self, event: Event) -> list[LinkResult]:
        """Resolve and connect every present component; replay-safe."""
        if event.id is None:
            raise FusionError("event must be recorded before fusion")
        results = []
        for role, attr in (("Actor", "actor"), ("Recipient", "recipient"), ("Object", "object")):
            ref = getattr(event, attr)
            if ref is None:
                continue
            result = self.resolve_mention(Mention(ref.text, role, event.id))
            ref.entity_id = result.entity_id
            self.model.add_structural(event.id, result.entity_id, _ROLE_EDGE[role])
            results.append(result)
        return results

    def fuse_all(self, events: Optional[Iterable[Event]] = None) -> FusionReport:
        report = FusionReport()
        before = sum(
            1
            for s in self.model.structural()
            if s.kind in (_ROLE_EDGE["Actor"], _ROLE_EDGE["Recipient"], _ROLE_EDGE["Object"])
        )
        for event in events if events is not None else self.model.events():
            for result in self.fuse_event(event):
                report.count(result)
        after = sum(
            1
            for s in self.model.structural()
            if s.kind in (_ROLE_EDGE["Actor"], _ROLE_EDGE["Recipient"], _ROLE_EDGE["Object"])
        )
        report.edges_added = after - before
        return report
