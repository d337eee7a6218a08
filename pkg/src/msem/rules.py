"""Rule-driven generation of evolutionary relations from events.

A rule carries trigger words, a list of required components, and edge
templates whose five slots (source, destination, relation, timestamp,
attributes) bind to event components or constants.  Matching rules all
fire; duplicate quintuples collapse inside the model store.  Events no
rule matches can be clustered to guide the authoring of new rules.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .encoding import tokenize
from .model import EcosystemModel, Event, ModelError, to_utc
from .tags import ARGUMENT_TYPES

COMPONENT_NAMES = frozenset(ARGUMENT_TYPES)


class RuleError(Exception):
    pass


@dataclass(frozen=True)
class EdgeTemplate:
    """Slot values naming a component bind to it; other values are constants.

    ``src``/``dst`` must bind to linkable components (entity-bearing ones)
    or constant entity names; ``ts`` binds to Time or a constant date;
    ``attrs`` values may reference components by name.
    """

    src: str
    dst: str
    rel: str
    ts: str = "Time"
    attrs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        for slot, value in (("src", self.src), ("dst", self.dst), ("rel", self.rel), ("ts", self.ts)):
            if not value:
                raise RuleError(f"edge template slot {slot!r} must be non-null")

    def to_json(self) -> dict:
        return {
            "src": self.src,
            "dst": self.dst,
            "rel": self.rel,
            "ts": self.ts,
            "attrs": dict(self.attrs),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EdgeTemplate":
        return cls(
            src=obj["src"],
            dst=obj["dst"],
            rel=obj["rel"],
            ts=obj.get("ts", "Time"),
            attrs=tuple(sorted((obj.get("attrs") or {}).items())),
        )


@dataclass(frozen=True)
class Rule:
    id: str
    twords: frozenset[str]
    components: tuple[str, ...]
    edges: tuple[EdgeTemplate, ...]

    def __post_init__(self) -> None:
        if not self.twords:
            raise RuleError(f"rule {self.id}: trigger-word set must be non-empty")
        unknown = [c for c in self.components if c not in COMPONENT_NAMES]
        if unknown:
            raise RuleError(f"rule {self.id}: unknown components {unknown}")
        for edge in self.edges:
            for slot in (edge.src, edge.dst):
                if slot in COMPONENT_NAMES and slot not in self.components:
                    raise RuleError(
                        f"rule {self.id}: edge references component {slot!r} "
                        f"outside the rule's component list"
                    )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "twords": sorted(self.twords),
            "components": list(self.components),
            "edges": [e.to_json() for e in self.edges],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Rule":
        return cls(
            id=str(obj["id"]),
            twords=frozenset(str(w).casefold() for w in obj["twords"]),
            components=tuple(obj.get("components", ())),
            edges=tuple(EdgeTemplate.from_json(e) for e in obj.get("edges", ())),
        )


def load_rulebase(path: str) -> list[Rule]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, list):
        raise RuleError("rulebase file must hold a JSON array of rules")
    rules = [Rule.from_json(obj) for obj in payload]
    ids = [r.id for r in rules]
    if len(set(ids)) != len(ids):
        raise RuleError("duplicate rule ids in rulebase")
    return rules


def save_rulebase(rules: Sequence[Rule], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_json() for r in rules], fh, ensure_ascii=False, indent=2)
        fh.write("\n")


# ---------------- matching ----------------


def _component_present(event: Event, name: str) -> bool:
    if name == "Actor":
        return event.actor is not None
    if name == "Recipient":
        return event.recipient is not None
    if name == "Object":
        return event.object is not None
    if name == "Attribute":
        return event.attribute is not None
    return True  # Action and Time are always populated


def _has_trigger(rule: Rule, event: Event) -> bool:
    action_tokens = {t.casefold() for t in tokenize(event.action)}
    if rule.twords & action_tokens:
        return True
    if event.title:
        title_tokens = {t.casefold() for t in tokenize(event.title)}
        if rule.twords & title_tokens:
            return True
    return False


def match_rules(event: Event, rulebase: Sequence[Rule]) -> list[Rule]:
    """All rules whose trigger fires and whose required components exist,
    in rulebase order."""
    return [
        rule
        for rule in rulebase
        if _has_trigger(rule, event)
        and all(_component_present(event, c) for c in rule.components)
    ]


# ---------------- instantiation ----------------


@dataclass
class Quintuple:
    source: str  # entity id
    destination: str  # entity id
    relation: str
    timestamp: object
    attributes: dict[str, str]
    rule_id: str
    event_id: str


def _component_text(event: Event, name: str) -> Optional[str]:
    if name == "Actor":
        return event.actor.text if event.actor else None
    if name == "Recipient":
        return event.recipient.text if event.recipient else None
    if name == "Object":
        return event.object.text if event.object else None
    if name == "Attribute":
        return event.attribute
    if name == "Action":
        return event.action
    if name == "Time":
        return event.time.date().isoformat()
    return None


def _endpoint_entity(event: Event, model: EcosystemModel, slot: str) -> Optional[str]:
    """Entity id for a src/dst slot: a fused component or a constant name."""
    if slot in COMPONENT_NAMES:
        ref = {
            "Actor": event.actor,
            "Recipient": event.recipient,
            "Object": event.object,
        }.get(slot)
        return ref.entity_id if ref is not None else None
    matches = model.find_entity_by_name(slot)
    return matches[0] if matches else None


def instantiate(
    event: Event, rule: Rule, model: EcosystemModel
) -> tuple[list[Quintuple], list[dict]]:
    """Fill each edge template from the event; unresolvable slots skip the
    template with a diagnostic rather than failing the event."""
    if event.id is None:
        raise RuleError("event must be recorded before rule instantiation")
    out: list[Quintuple] = []
    diagnostics: list[dict] = []
    for idx, edge in enumerate(rule.edges):
        src = _endpoint_entity(event, model, edge.src)
        dst = _endpoint_entity(event, model, edge.dst)
        if src is None or dst is None:
            diagnostics.append(
                {
                    "kind": "unresolved_slot",
                    "rule": rule.id,
                    "event": event.id,
                    "template": idx,
                    "slot": "src" if src is None else "dst",
                }
            )
            continue
        ts = event.time if edge.ts == "Time" else to_utc(edge.ts)
        attrs = {}
        for key, value in edge.attrs:
            if value in COMPONENT_NAMES:
                attrs[key] = _component_text(event, value) or value
            else:
                attrs[key] = value
        out.append(Quintuple(src, dst, edge.rel, ts, attrs, rule.id, event.id))
    return out, diagnostics


@dataclass
class CoverageReport:
    matched: int = 0
    total: int = 0
    by_rule: dict[str, int] = field(default_factory=dict)
    applied: int = 0
    diagnostics: list[dict] = field(default_factory=list)

    @property
    def coverage(self) -> float:
        return self.matched / self.total if self.total else 0.0

    def to_json(self) -> dict:
        return {
            "matched": self.matched,
            "total": self.total,
            "coverage": round(self.coverage, 6),
            "byRule": dict(sorted(self.by_rule.items())),
            "applied": self.applied,
        }


def apply_rules(
    model: EcosystemModel,
    rulebase: Sequence[Rule],
    events: Optional[Iterable[Event]] = None,
) -> tuple[CoverageReport, list[Event]]:
    """Run the rulebase over events, writing quintuples into the model.

    Returns the coverage report and the list of unmatched events (rule
    authoring targets).  Re-application is idempotent because the model
    dedupes full quintuples.
    """
    report = CoverageReport()
    unmatched: list[Event] = []
    for event in events if events is not None else model.events():
        report.total += 1
        matches = match_rules(event, rulebase)
        if not matches:
            unmatched.append(event)
            continue
        report.matched += 1
        for rule in matches:
            report.by_rule[rule.id] = report.by_rule.get(rule.id, 0) + 1
            quintuples, diags = instantiate(event, rule, model)
            report.diagnostics.extend(diags)
            for q in quintuples:
                try:
                    model.apply_evolution(
                        q.source, q.destination, q.relation, q.timestamp,
                        q.attributes, q.event_id,
                    )
                    report.applied += 1
                except ModelError as exc:
                    report.diagnostics.append(
                        {"kind": "rejected_quintuple", "rule": q.rule_id,
                         "event": q.event_id, "reason": str(exc)}
                    )
    return report, unmatched


# ---------------- clustering of unmatched events ----------------


@dataclass
class UnmatchedCluster:
    cluster_id: int
    member_event_ids: list[str]
    centroid_terms: list[str]


def _tfidf(texts: Sequence[str]) -> tuple[np.ndarray, list[str]]:
    vocab: dict[str, int] = {}
    docs = []
    for text in texts:
        counts: dict[int, int] = {}
        for token in tokenize(text.casefold()):
            idx = vocab.setdefault(token, len(vocab))
            counts[idx] = counts.get(idx, 0) + 1
        docs.append(counts)
    n, v = len(texts), len(vocab)
    tf = np.zeros((n, v))
    for i, counts in enumerate(docs):
        total = sum(counts.values()) or 1
        for idx, c in counts.items():
            tf[i, idx] = c / total
    df = (tf > 0).sum(axis=0)
    idf = np.log((1 + n) / (1 + df)) + 1.0
    mat = tf * idf
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    mat = np.divide(mat, norms, out=np.zeros_like(mat), where=norms > 0)
    terms = [t for t, _ in sorted(vocab.items(), key=lambda kv: kv[1])]
    return mat, terms


def _kmeans(mat: np.ndarray, k: int, rng: np.random.Generator, iters: int = 50) -> np.ndarray:
    n = mat.shape[0]
    # k-means++ seeding
    centers = [mat[int(rng.integers(n))]]
    for _ in range(1, k):
        d2 = np.min(
            [((mat - c) ** 2).sum(axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(mat[int(rng.integers(n))])
            continue
        centers.append(mat[int(rng.choice(n, p=d2 / total))])
    C = np.stack(centers)
    assign = np.full(n, -1, dtype=int)
    for _ in range(iters):
        dist = ((mat[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        new_assign = dist.argmin(axis=1)
        if (new_assign == assign).all():
            break
        assign = new_assign
        for j in range(k):
            members = mat[assign == j]
            if len(members):
                C[j] = members.mean(axis=0)
    return assign


def cluster_unmatched(
    events: Sequence[Event], k: int = 10, seed: int = 0, top_terms: int = 5
) -> list[UnmatchedCluster]:
    """TF-IDF + k-means over event titles; clusters sorted by descending size."""
    if k < 1:
        raise RuleError("k must be >= 1")
    if not events:
        raise RuleError("no events to cluster")
    texts = [e.title or e.action for e in events]
    k = min(k, len(events))
    mat, terms = _tfidf(texts)
    assign = _kmeans(mat, k, np.random.default_rng(seed))
    clusters = []
    for j in range(k):
        idxs = [i for i in range(len(events)) if assign[i] == j]
        if not idxs:
            continue
        centroid = mat[idxs].mean(axis=0)
        top = np.argsort(-centroid)[:top_terms]
        clusters.append(
            UnmatchedCluster(
                cluster_id=j,
                member_event_ids=[events[i].id or f"#{i}" for i in idxs],
                centroid_terms=[terms[t] for t in top if centroid[t] > 0],
            )
        )
    clusters.sort(key=lambda c: (-len(c.member_event_ids), c.cluster_id))
    return clusters
