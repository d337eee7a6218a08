"""Snapshot analytics: communities, their evolution, and storylines.

Snapshots project to an undirected weighted graph over stakeholder-layer
entities (edge weight = count of evolutionary edges between the pair).
Louvain partitions each snapshot; adjacent partitions align by member
overlap or shared key nodes, and the alignment's bipartite components
classify into Birth/Death/Split/Merge/Continue.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Sequence

import networkx as nx

from .model import (
    EcosystemModel,
    Layer,
    ModelSnapshot,
    StructuralKind,
    UnknownNodeError,
    layer_of,
    to_utc,
)


class EvolutionError(Exception):
    pass


@dataclass(frozen=True)
class Community:
    id: str
    at: datetime
    members: frozenset[str]
    key_nodes: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise EvolutionError("community must have members")
        if not set(self.key_nodes) <= self.members:
            raise EvolutionError("key nodes must be members")


@dataclass(frozen=True)
class AlignmentPair:
    prev_id: str
    next_id: str
    jaccard: float


@dataclass(frozen=True)
class EvolutionEvent:
    kind: str  # Birth | Death | Split | Merge | Continue
    before: tuple[str, ...]
    after: tuple[str, ...]


@dataclass(frozen=True)
class StorylineEntry:
    timestamp: datetime
    event_id: str
    relation: str
    counterpart: Optional[str]
    title: str


def build_snapshots(model: EcosystemModel, times: Sequence) -> list[ModelSnapshot]:
    stamps = [to_utc(t) for t in times]
    if any(b <= a for a, b in zip(stamps, stamps[1:])):
        raise EvolutionError("snapshot times must be strictly increasing")
    return [model.snapshot_at(ts) for ts in stamps]


def project_stakeholder_graph(snapshot: ModelSnapshot) -> nx.Graph:
    """Undirected weighted projection of the snapshot's stakeholder layer."""
    graph = nx.Graph()
    for ent in snapshot.entities:
        if layer_of(ent.kind) is Layer.STAKEHOLDER:
            graph.add_node(ent.id)
    for rel in snapshot.evolutionary:
        if rel.source in graph and rel.destination in graph and rel.source != rel.destination:
            if graph.has_edge(rel.source, rel.destination):
                graph[rel.source][rel.destination]["weight"] += 1
            else:
                graph.add_edge(rel.source, rel.destination, weight=1)
    return graph


def communities_of_graph(
    graph: nx.Graph, at: datetime, seed: int = 0, m: int = 5, id_prefix: str = ""
) -> list[Community]:
    """Louvain partition with deterministic ordering; singletons allowed."""
    if graph.number_of_nodes() == 0:
        return []
    parts = nx.community.louvain_communities(graph, weight="weight", seed=seed)
    parts = sorted((sorted(p) for p in parts), key=lambda p: p[0])
    degree = dict(graph.degree(weight="weight"))
    out = []
    for i, members in enumerate(parts):
        key = sorted(members, key=lambda n: (-degree.get(n, 0), n))[:m]
        out.append(
            Community(
                id=f"{id_prefix}c{i}",
                at=at,
                members=frozenset(members),
                key_nodes=tuple(key),
            )
        )
    return out


def detect_communities(
    snapshot: ModelSnapshot, seed: int = 0, m: int = 5
) -> list[Community]:
    prefix = snapshot.at.date().isoformat() + "/"
    return communities_of_graph(
        project_stakeholder_graph(snapshot), snapshot.at, seed, m, id_prefix=prefix
    )


def align_communities(
    prev: Sequence[Community],
    nxt: Sequence[Community],
    theta: float = 0.3,
) -> list[AlignmentPair]:
    """Pairs with Jaccard >= theta, or where the successor holds at least
    half of the predecessor's key nodes.  A community may appear in many
    pairs; that is what makes splits and merges expressible."""
    pairs = []
    for p in prev:
        for q in nxt:
            inter = len(p.members & q.members)
            union = len(p.members | q.members)
            jac = inter / union if union else 0.0
            keys_held = len(set(p.key_nodes) & q.members)
            if jac >= theta or (p.key_nodes and 2 * keys_held >= len(p.key_nodes)):
                pairs.append(AlignmentPair(p.id, q.id, jac))
    return pairs


def classify_events(
    prev: Sequence[Community],
    nxt: Sequence[Community],
    alignment: Sequence[AlignmentPair],
) -> list[EvolutionEvent]:
    """Each community lands in exactly one event, by bipartite component:
    unmatched next -> Birth, unmatched prev -> Death, 1-1 -> Continue,
    1-many -> Split, many-1 (or many-many) -> Merge."""
    graph = nx.Graph()
    for p in prev:
        graph.add_node(("prev", p.id))
    for q in nxt:
        graph.add_node(("next", q.id))
    for pair in alignment:
        graph.add_edge(("prev", pair.prev_id), ("next", pair.next_id))

    events = []
    for comp in nx.connected_components(graph):
        before = tuple(sorted(cid for side, cid in comp if side == "prev"))
        after = tuple(sorted(cid for side, cid in comp if side == "next"))
        if not before:
            kind = "Birth"
        elif not after:
            kind = "Death"
        elif len(before) == 1 and len(after) == 1:
            kind = "Continue"
        elif len(before) == 1:
            kind = "Split"
        else:
            kind = "Merge"
        events.append(EvolutionEvent(kind, before, after))
    events.sort(key=lambda e: (e.before, e.after))
    return events


@dataclass
class EvolutionReport:
    snapshots: list[ModelSnapshot]
    communities: dict[str, list[Community]]  # keyed by snapshot ISO timestamp
    events: list[list[EvolutionEvent]]  # one list per adjacent snapshot pair

    def to_json(self) -> dict:
        return {
            "snapshots": [s.at.isoformat() for s in self.snapshots],
            "communities": {
                ts: [
                    {
                        "id": c.id,
                        "members": sorted(c.members),
                        "keyNodes": list(c.key_nodes),
                    }
                    for c in comms
                ]
                for ts, comms in self.communities.items()
            },
            "events": [
                {"kind": e.kind, "before": list(e.before), "after": list(e.after)}
                for step in self.events
                for e in step
            ],
        }


def analyze_evolution(
    model: EcosystemModel,
    times: Sequence,
    seed: int = 0,
    theta: float = 0.3,
    m: int = 5,
) -> EvolutionReport:
    snapshots = build_snapshots(model, times)
    communities = {
        s.at.isoformat(): detect_communities(s, seed=seed, m=m) for s in snapshots
    }
    events = []
    ordered = [communities[s.at.isoformat()] for s in snapshots]
    for prev, nxt in zip(ordered, ordered[1:]):
        events.append(classify_events(prev, nxt, align_communities(prev, nxt, theta)))
    return EvolutionReport(snapshots, communities, events)


# ---------------- storylines ----------------


def _feature_closure(model: EcosystemModel, feature_id: str, deep: bool = False) -> set[str]:
    """The feature plus its Equivalence/Inclusion neighbors (one hop, or the
    transitive closure when deep)."""
    seen = {feature_id}
    frontier = [feature_id]
    while frontier:
        node = frontier.pop()
        neighbors = set()
        for rel in model.structural():
            if rel.kind in (StructuralKind.EQUIVALENCE, StructuralKind.INCLUSION):
                if rel.src == node:
                    neighbors.add(rel.dst)
                elif rel.dst == node:
                    neighbors.add(rel.src)
        fresh = neighbors - seen
        seen |= fresh
        if deep:
            frontier.extend(fresh)
    return seen


def storyline(
    model: EcosystemModel,
    stakeholder_id: str,
    feature_id: Optional[str] = None,
    deep_closure: bool = False,
) -> list[StorylineEntry]:
    """Time-ordered events touching the stakeholder, optionally restricted
    to those about one feature (or its equivalent/included neighbors)."""
    stakeholder = model.entity(stakeholder_id)
    if layer_of(stakeholder.kind) is not Layer.STAKEHOLDER:
        raise UnknownNodeError(f"{stakeholder_id} is not a stakeholder-layer entity")

    event_ids = set()
    objects: dict[str, set[str]] = {}
    for rel in model.structural():
        if rel.kind in (StructuralKind.HAS_ACTOR, StructuralKind.HAS_RECIPIENT):
            if rel.dst == stakeholder_id:
                event_ids.add(rel.src)
        elif rel.kind is StructuralKind.HAS_OBJECT:
            objects.setdefault(rel.src, set()).add(rel.dst)

    if feature_id is not None:
        model.entity(feature_id)
        allowed = _feature_closure(model, feature_id, deep_closure)
        event_ids = {e for e in event_ids if objects.get(e, set()) & allowed}

    evo_by_event: dict[str, list] = {}
    for rel in model.evolutionary():
        evo_by_event.setdefault(rel.event_id, []).append(rel)

    entries = []
    for eid in event_ids:
        event = model.event(eid)
        rels = sorted(evo_by_event.get(eid, []), key=lambda r: r.id)
        touching = [
            r for r in rels if stakeholder_id in (r.source, r.destination)
        ] or rels
        if touching:
            rel = touching[0]
            label = rel.relation
            other = rel.destination if rel.source == stakeholder_id else rel.source
            counterpart = model.entity(other).canonical_name if other != stakeholder_id else None
        else:
            label = event.action
            ref = event.object or event.recipient
            counterpart = ref.text if ref is not None else None
        entries.append(
            StorylineEntry(
                timestamp=event.time,
                event_id=eid,
                relation=label,
                counterpart=counterpart,
                title=event.title or event.action,
            )
        )
    entries.sort(key=lambda e: (e.timestamp, e.event_id))
    return entries


def render_timeline(entries: Sequence[StorylineEntry], heading: str = "") -> str:
    """Plain-text timeline for terminal display."""
    lines = []
    if heading:
        lines.append(heading)
        lines.append("=" * len(heading))
    for e in entries:
        counterpart = f" -> {e.counterpart}" if e.counterpart else ""
        lines.append(f"{e.timestamp.date().isoformat()}  [{e.relation}]{counterpart}  {e.title}")
    if not entries:
        lines.append("(no events)")
    return "\n".join(lines)


def storyline_json(entries: Sequence[StorylineEntry]) -> list[dict]:
    return [
        {
            "ts": e.timestamp.isoformat(),
            "event": e.event_id,
            "relation": e.relation,
            "counterpart": e.counterpart,
            "title": e.title,
        }
        for e in entries
    ]
